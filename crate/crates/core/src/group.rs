//! Arithmetic of the Heisenberg group ℍⁿ = ℂⁿ × ℝ.
//!
//! Points are stored as `(z, t)` with `z ∈ ℝ²ⁿ` in the real encoding
//! `(x₁, …, xₙ, y₁, …, yₙ)` of `z = x + iy`. In this encoding the group law reads
//!
//! ```text
//! (z, t) · (w, s) = (z + w, t + s + ½ Im(z · w̄)),   Im(z · w̄) = Σⱼ (yⱼ uⱼ − xⱼ vⱼ)
//! ```
//!
//! where `w = u + iv`. Every other module goes through [`twist`] for the
//! antisymmetric form, so the encoding is fixed in one place.

use std::f64::consts::PI;
use std::fmt;
use std::ops::Mul;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Horizontal coordinates. Inline storage covers n ≤ 3 without allocating.
pub type Horizontal = SmallVec<[f64; 6]>;

/// Complex dimension `n` together with the homogeneous dimension `Q = 2n + 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupParams {
    n: usize,
}

impl GroupParams {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::OddDimension(0));
        }
        Ok(Self { n })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Homogeneous dimension `Q = 2n + 2`.
    #[inline]
    pub fn homogeneous_dim(&self) -> usize {
        2 * self.n + 2
    }

    #[inline]
    pub fn q(&self) -> f64 {
        self.homogeneous_dim() as f64
    }

    /// Real dimension of the underlying manifold, `2n + 1`.
    #[inline]
    pub fn real_dim(&self) -> usize {
        2 * self.n + 1
    }

    pub fn identity(&self) -> GroupPoint {
        GroupPoint::identity(self.n)
    }

    /// Exact Lebesgue measure `C_Q` of the unit Koranyi ball.
    pub fn unit_ball_volume(&self) -> f64 {
        koranyi_ball_volume(self.n)
    }
}

/// A point `(z, t)` of ℍⁿ.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPoint {
    z: Horizontal,
    t: f64,
}

impl fmt::Debug for GroupPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {})", self.z.as_slice(), self.t)
    }
}

impl GroupPoint {
    pub fn new(z: impl Into<Horizontal>, t: f64) -> Result<Self> {
        let z = z.into();
        if z.is_empty() || z.len() % 2 != 0 {
            return Err(Error::OddDimension(z.len()));
        }
        if !t.is_finite() || z.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { z, t })
    }

    /// Builds a point from `2n + 1` coordinates `(x₁..xₙ, y₁..yₙ, t)`.
    pub fn from_coords(coords: &[f64]) -> Result<Self> {
        match coords.split_last() {
            Some((&t, z)) => Self::new(Horizontal::from_slice(z), t),
            None => Err(Error::OddDimension(0)),
        }
    }

    /// Unchecked constructor for hot loops; callers guarantee even length.
    #[inline]
    pub(crate) fn from_parts(z: Horizontal, t: f64) -> Self {
        debug_assert!(z.len().is_multiple_of(2) && !z.is_empty());
        Self { z, t }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            z: smallvec::smallvec![0.0; 2 * n],
            t: 0.0,
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.z.len() / 2
    }

    #[inline]
    pub fn z(&self) -> &[f64] {
        &self.z
    }

    #[inline]
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn coords(&self) -> Vec<f64> {
        let mut v = self.z.to_vec();
        v.push(self.t);
        v
    }

    pub fn is_identity(&self) -> bool {
        self.t == 0.0 && self.z.iter().all(|&c| c == 0.0)
    }

    fn check_dim(&self, other: &GroupPoint) -> Result<()> {
        if self.z.len() != other.z.len() {
            return Err(Error::DimensionMismatch {
                expected: self.z.len(),
                found: other.z.len(),
            });
        }
        Ok(())
    }

    /// Group product `self · other`.
    pub fn multiply(&self, other: &GroupPoint) -> Result<GroupPoint> {
        self.check_dim(other)?;
        Ok(self.mul_unchecked(other))
    }

    #[inline]
    pub(crate) fn mul_unchecked(&self, other: &GroupPoint) -> GroupPoint {
        let z = self
            .z
            .iter()
            .zip(other.z.iter())
            .map(|(a, b)| a + b)
            .collect();
        let t = self.t + other.t + 0.5 * twist(&self.z, &other.z);
        GroupPoint { z, t }
    }

    /// `(z, t)⁻¹ = (−z, −t)`.
    pub fn inverse(&self) -> GroupPoint {
        GroupPoint {
            z: self.z.iter().map(|c| -c).collect(),
            t: -self.t,
        }
    }

    /// Non-isotropic dilation `δ_r(z, t) = (rz, r²t)`.
    pub fn dilate(&self, r: f64) -> Result<GroupPoint> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::NonPositiveDilation(r));
        }
        Ok(self.dilate_unchecked(r))
    }

    #[inline]
    pub(crate) fn dilate_unchecked(&self, r: f64) -> GroupPoint {
        GroupPoint {
            z: self.z.iter().map(|c| r * c).collect(),
            t: r * r * self.t,
        }
    }

    /// Koranyi gauge `(‖z‖⁴ + t²)^{1/4}`.
    #[inline]
    pub fn knorm(&self) -> f64 {
        knorm_parts(&self.z, self.t)
    }

    /// Euclidean norm squared of the horizontal part.
    #[inline]
    pub fn z_norm_sq(&self) -> f64 {
        self.z.iter().map(|c| c * c).sum()
    }

    /// `x · ξ · x`, which coincides with the Euclidean sum `2x + ξ`.
    pub fn sandwich(&self, xi: &GroupPoint) -> Result<GroupPoint> {
        self.check_dim(xi)?;
        Ok(GroupPoint {
            z: self
                .z
                .iter()
                .zip(xi.z.iter())
                .map(|(a, b)| 2.0 * a + b)
                .collect(),
            t: 2.0 * self.t + xi.t,
        })
    }

    /// Coordinatewise (Euclidean) sum in ℝ²ⁿ⁺¹.
    pub fn euclid_add(&self, other: &GroupPoint) -> Result<GroupPoint> {
        self.check_dim(other)?;
        Ok(GroupPoint {
            z: self.z.iter().zip(other.z.iter()).map(|(a, b)| a + b).collect(),
            t: self.t + other.t,
        })
    }

    /// Coordinatewise (Euclidean) scaling in ℝ²ⁿ⁺¹.
    pub fn euclid_scale(&self, c: f64) -> GroupPoint {
        GroupPoint {
            z: self.z.iter().map(|v| c * v).collect(),
            t: c * self.t,
        }
    }

    /// Largest absolute coordinate difference to `other`.
    pub fn max_abs_diff(&self, other: &GroupPoint) -> f64 {
        self.z
            .iter()
            .zip(other.z.iter())
            .map(|(a, b)| (a - b).abs())
            .fold((self.t - other.t).abs(), f64::max)
    }
}

impl Mul for &GroupPoint {
    type Output = GroupPoint;

    /// Panics on dimension mismatch; use [`GroupPoint::multiply`] for a checked product.
    fn mul(self, rhs: &GroupPoint) -> GroupPoint {
        assert_eq!(self.z.len(), rhs.z.len(), "dimension mismatch in group product");
        self.mul_unchecked(rhs)
    }
}

/// `Im(z · w̄) = Σⱼ (yⱼ uⱼ − xⱼ vⱼ)` for `z = x + iy`, `w = u + iv`.
#[inline]
pub fn twist(z: &[f64], w: &[f64]) -> f64 {
    let n = z.len() / 2;
    let (x, y) = z.split_at(n);
    let (u, v) = w.split_at(n);
    let mut acc = 0.0;
    for j in 0..n {
        acc += y[j] * u[j] - x[j] * v[j];
    }
    acc
}

#[inline]
pub fn knorm_parts(z: &[f64], t: f64) -> f64 {
    let r2: f64 = z.iter().map(|c| c * c).sum();
    (r2 * r2 + t * t).sqrt().sqrt()
}

/// Γ(k/2) for a positive integer `k`.
fn gamma_half(k: usize) -> f64 {
    assert!(k > 0);
    let (mut x, mut g) = if k.is_multiple_of(2) { (1.0, 1.0) } else { (0.5, PI.sqrt()) };
    while 2.0 * x < k as f64 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Exact volume `C_Q = |B(0,1)|` of the unit Koranyi ball in ℍⁿ:
/// `π^n Γ(n/2) Γ(3/2) / (Γ(n) Γ(n/2 + 3/2))`.
pub fn koranyi_ball_volume(n: usize) -> f64 {
    PI.powi(n as i32) * gamma_half(n) * gamma_half(3) / (gamma_half(2 * n) * gamma_half(n + 3))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[f64]) -> GroupPoint {
        GroupPoint::from_coords(c).unwrap()
    }

    #[test]
    fn identity_is_neutral() {
        let w = p(&[0.3, -1.2, 4.0]);
        assert_eq!(GroupPoint::identity(1).multiply(&w).unwrap(), w);
        assert_eq!(w.multiply(&GroupPoint::identity(1)).unwrap(), w);
    }

    #[test]
    fn group_law_example() {
        let out = p(&[1.0, 0.0, 0.0]).multiply(&p(&[0.0, 1.0, 0.0])).unwrap();
        assert_eq!(out, p(&[1.0, 1.0, -0.5]));
    }

    #[test]
    fn inverse_examples() {
        assert!(GroupPoint::identity(1).inverse().is_identity());
        let x = p(&[1.0, 2.0, 3.0]);
        assert_eq!(x.inverse(), p(&[-1.0, -2.0, -3.0]));
        assert!(x.multiply(&x.inverse()).unwrap().is_identity());
        assert_eq!(x.inverse().knorm(), x.knorm());
    }

    #[test]
    fn dilation_examples() {
        let x = p(&[1.0, 0.0, 3.0]);
        assert_eq!(x.dilate(1.0).unwrap(), x);
        assert_eq!(x.dilate(2.0).unwrap(), p(&[2.0, 0.0, 12.0]));
        assert!(matches!(x.dilate(0.0), Err(Error::NonPositiveDilation(_))));
        assert!(x.dilate(-1.0).is_err());
    }

    #[test]
    fn knorm_examples() {
        assert_eq!(p(&[3.0, 4.0, 0.0]).knorm(), 5.0);
        assert_eq!(p(&[0.0, 0.0, -16.0]).knorm(), 4.0);
        assert_eq!(GroupPoint::identity(2).knorm(), 0.0);
    }

    #[test]
    fn sandwich_examples() {
        let xi = p(&[0.0, 1.0, 2.0]);
        assert_eq!(GroupPoint::identity(1).sandwich(&xi).unwrap(), xi);
        let x = p(&[1.0, 0.0, 0.0]);
        let s = x.sandwich(&xi).unwrap();
        assert_eq!(s, p(&[2.0, 1.0, 2.0]));
        let twice = x.multiply(&xi).unwrap().multiply(&x).unwrap();
        assert!(twice.max_abs_diff(&s) < 1e-15);
    }

    #[test]
    fn rejects_bad_points() {
        assert!(matches!(
            GroupPoint::from_coords(&[1.0, f64::NAN, 0.0]),
            Err(Error::NonFinite)
        ));
        assert!(matches!(
            GroupPoint::from_coords(&[1.0, 0.0]),
            Err(Error::OddDimension(1))
        ));
        let a = GroupPoint::identity(1);
        let b = GroupPoint::identity(2);
        assert!(matches!(
            a.multiply(&b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ball_volume_closed_form() {
        assert!((koranyi_ball_volume(1) - PI * PI / 2.0).abs() < 1e-14);
        assert_eq!(GroupParams::new(3).unwrap().homogeneous_dim(), 8);
        assert!(GroupParams::new(0).is_err());
    }

    #[test]
    fn gamma_half_values() {
        assert!((gamma_half(1) - PI.sqrt()).abs() < 1e-15);
        assert_eq!(gamma_half(2), 1.0);
        assert_eq!(gamma_half(8), 6.0);
        assert!((gamma_half(5) - 0.75 * PI.sqrt()).abs() < 1e-14);
    }
}
