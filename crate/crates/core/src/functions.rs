//! Symbolic test functions: indicators, power and log weights, and the
//! lattice-sum counterexample families.

use std::f64::consts::E;

use rand::Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{invalid, Error, Result};
use crate::group::{knorm_parts, koranyi_ball_volume, twist, GroupPoint, Horizontal};
use crate::lattice::{for_each_lattice_point, LatticeIndex};
use crate::sampling::uniform_in_ball;

/// Cutoff radius of the far-field log family.
pub const FAR_FIELD_CUTOFF: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeFamily {
    /// `E_a = 2a + Q(0, |a|^{-N-1})`, weight `|a|^{M/e}`, `a ≠ 0`.
    A,
    /// `E_a = 2a + Q(0, |a|^{-N})`, weight `|a|^{Q(N-1)/e} (log|a|)^{-2/e}`, `|a| > e`.
    B,
    /// `a · B(0, 2|a|^{-N})`, same weight as `B`.
    C,
}

/// Parameters of a single lattice sum; `exponent` is the Lebesgue exponent
/// appearing in the weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeParams {
    pub n: usize,
    #[serde(rename = "N")]
    pub decay: f64,
    #[serde(rename = "M", default)]
    pub growth: f64,
    pub exponent: f64,
    pub truncation: f64,
}

/// Parameters shared by a pair of lattice sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyParams {
    pub n: usize,
    #[serde(rename = "N")]
    pub decay: f64,
    #[serde(rename = "M", default)]
    pub growth: f64,
    pub p: f64,
    pub q: f64,
    pub truncation: f64,
}

impl FamilyParams {
    pub fn q_dim(&self) -> f64 {
        (2 * self.n + 2) as f64
    }

    fn with_exponent(&self, exponent: f64) -> LatticeParams {
        LatticeParams {
            n: self.n,
            decay: self.decay,
            growth: self.growth,
            exponent,
            truncation: self.truncation,
        }
    }

    fn check_common(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n", "must be positive"));
        }
        if !(self.decay >= 3.0) {
            return Err(invalid(
                "N",
                format!("{} < 3 does not keep the supports disjoint", self.decay),
            ));
        }
        for (name, v) in [("p", self.p), ("q", self.q)] {
            if !(v >= 1.0) || !v.is_finite() {
                return Err(invalid(name, format!("{v} must be a finite exponent >= 1")));
            }
        }
        if !(self.truncation >= 1.0) {
            return Err(invalid("truncation", "must be >= 1"));
        }
        Ok(())
    }
}

/// A closed descriptor of a nonnegative function on ℍⁿ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFunction {
    /// `χ_{B(center, radius)}`; `center` holds all `2n+1` coordinates.
    IndicatorBall { center: Vec<f64>, radius: f64 },
    /// `χ` of `corner + Q(0,r)`, `Q(0,r) = [0,r]²ⁿ × [0,r²]`.
    IndicatorCube { corner: Vec<f64>, r: f64 },
    /// `|x|^{-s}`, optionally multiplied by `support`.
    PowerWeight {
        s: f64,
        #[serde(default)]
        support: Option<Box<TestFunction>>,
    },
    /// `|x|^{power} (log|x|)^{log_exponent}` on `|x| > cutoff`.
    LogPowerTail {
        power: f64,
        log_exponent: f64,
        #[serde(default = "default_cutoff")]
        cutoff: f64,
    },
    LatticeSum {
        family: LatticeFamily,
        params: LatticeParams,
    },
    Scale { c: f64, inner: Box<TestFunction> },
    Sum { terms: Vec<TestFunction> },
    /// `x ↦ inner(δ_s x)`.
    Dilate { s: f64, inner: Box<TestFunction> },
    /// `x ↦ inner(x⁻¹)`.
    Reflect { inner: Box<TestFunction> },
}

fn default_cutoff() -> f64 {
    FAR_FIELD_CUTOFF
}

/// Knorm of `c⁻¹ · x` where `c` is given by coordinates.
fn local_knorm(c: &[f64], x: &GroupPoint) -> f64 {
    let m = c.len() - 1;
    let (cz, ct) = (&c[..m], c[m]);
    let z: Horizontal = x.z().iter().zip(cz).map(|(a, b)| a - b).collect();
    knorm_parts(&z, x.t() - ct - 0.5 * twist(cz, x.z()))
}

impl TestFunction {
    pub fn zero() -> Self {
        TestFunction::Sum { terms: Vec::new() }
    }

    pub fn ball(center: &GroupPoint, radius: f64) -> Self {
        TestFunction::IndicatorBall {
            center: center.coords(),
            radius,
        }
    }

    pub fn unit_ball(n: usize) -> Self {
        Self::ball(&GroupPoint::identity(n), 1.0)
    }

    pub fn cube(corner: &GroupPoint, r: f64) -> Self {
        TestFunction::IndicatorCube {
            corner: corner.coords(),
            r,
        }
    }

    pub fn power(s: f64, support: Option<TestFunction>) -> Self {
        TestFunction::PowerWeight {
            s,
            support: support.map(Box::new),
        }
    }

    pub fn scaled(self, c: f64) -> Self {
        TestFunction::Scale {
            c,
            inner: Box::new(self),
        }
    }

    pub fn dilated(self, s: f64) -> Self {
        TestFunction::Dilate {
            s,
            inner: Box::new(self),
        }
    }

    pub fn reflected(self) -> Self {
        TestFunction::Reflect {
            inner: Box::new(self),
        }
    }

    /// Horizontal half-dimension fixed by the descriptor, if any.
    pub fn dim(&self) -> Option<usize> {
        use TestFunction::*;
        match self {
            IndicatorBall { center, .. } => Some((center.len().max(1) - 1) / 2),
            IndicatorCube { corner, .. } => Some((corner.len().max(1) - 1) / 2),
            LatticeSum { params, .. } => Some(params.n),
            PowerWeight { support, .. } => support.as_ref().and_then(|s| s.dim()),
            LogPowerTail { .. } => None,
            Scale { inner, .. } | Dilate { inner, .. } | Reflect { inner } => inner.dim(),
            Sum { terms } => terms.iter().find_map(|t| t.dim()),
        }
    }

    /// Checks parameters and that every fixed dimension equals `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        use TestFunction::*;
        let coords = |v: &Vec<f64>| -> Result<()> {
            if v.len() != 2 * n + 1 {
                return Err(Error::DimensionMismatch {
                    expected: 2 * n + 1,
                    found: v.len(),
                });
            }
            if v.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFinite);
            }
            Ok(())
        };
        match self {
            IndicatorBall { center, radius } => {
                coords(center)?;
                if !(*radius > 0.0) {
                    return Err(invalid("radius", "must be positive"));
                }
            }
            IndicatorCube { corner, r } => {
                coords(corner)?;
                if !(*r > 0.0) {
                    return Err(invalid("r", "must be positive"));
                }
            }
            PowerWeight { s, support } => {
                if !s.is_finite() {
                    return Err(Error::NonFinite);
                }
                if let Some(sup) = support {
                    sup.validate(n)?;
                }
            }
            LogPowerTail {
                power,
                log_exponent,
                cutoff,
            } => {
                if !power.is_finite() || !log_exponent.is_finite() {
                    return Err(Error::NonFinite);
                }
                if !(*cutoff > 1.0) {
                    return Err(invalid("cutoff", "must exceed 1"));
                }
            }
            LatticeSum { family, params } => {
                if params.n != n {
                    return Err(Error::DimensionMismatch {
                        expected: 2 * n,
                        found: 2 * params.n,
                    });
                }
                Lattice::new(*family, *params)?;
            }
            Scale { c, inner } => {
                if !(*c >= 0.0) || !c.is_finite() {
                    return Err(invalid("c", "must be finite and nonnegative"));
                }
                inner.validate(n)?;
            }
            Sum { terms } => {
                for t in terms {
                    t.validate(n)?;
                }
            }
            Dilate { s, inner } => {
                if !(*s > 0.0) {
                    return Err(Error::NonPositiveDilation(*s));
                }
                inner.validate(n)?;
            }
            Reflect { inner } => inner.validate(n)?,
        }
        Ok(())
    }

    /// Pointwise value at `x`.
    pub fn evaluate(&self, x: &GroupPoint) -> Result<f64> {
        use TestFunction::*;
        Ok(match self {
            IndicatorBall { center, radius } => {
                check_len(center, x)?;
                indicator(local_knorm(center, x) < *radius)
            }
            IndicatorCube { corner, r } => {
                check_len(corner, x)?;
                let m = corner.len() - 1;
                let inside = x
                    .z()
                    .iter()
                    .zip(&corner[..m])
                    .all(|(z, c)| (0.0..=*r).contains(&(z - c)))
                    && (0.0..=r * r).contains(&(x.t() - corner[m]));
                indicator(inside)
            }
            PowerWeight { s, support } => {
                let w = match support {
                    Some(sup) => sup.evaluate(x)?,
                    None => 1.0,
                };
                if w == 0.0 {
                    return Ok(0.0);
                }
                let k = x.knorm();
                if k == 0.0 && *s > 0.0 {
                    return Err(Error::SingularPoint);
                }
                w * k.powf(-s)
            }
            LogPowerTail {
                power,
                log_exponent,
                cutoff,
            } => {
                let k = x.knorm();
                if k > *cutoff {
                    k.powf(*power) * k.ln().powf(*log_exponent)
                } else {
                    0.0
                }
            }
            LatticeSum { family, params } => Lattice::new_unchecked(*family, *params).evaluate(x)?,
            Scale { c, inner } => c * inner.evaluate(x)?,
            Sum { terms } => {
                let mut acc = 0.0;
                for t in terms {
                    acc += t.evaluate(x)?;
                }
                acc
            }
            Dilate { s, inner } => inner.evaluate(&x.dilate(*s)?)?,
            Reflect { inner } => inner.evaluate(&x.inverse())?,
        })
    }

    /// `‖f‖_p^p` when it is known in closed form (or as a finite exact series).
    pub fn norm_pow_closed_form(&self, p: f64, n: usize) -> Option<f64> {
        use TestFunction::*;
        let q = (2 * n + 2) as f64;
        match self {
            IndicatorBall { radius, .. } => Some(koranyi_ball_volume(n) * radius.powf(q)),
            IndicatorCube { r, .. } => Some(r.powf(q)),
            LogPowerTail {
                power,
                log_exponent,
                cutoff,
            } => {
                // polar coordinates: σ = Q C_Q, integrand r^{pP + Q - 1} (log r)^{pL}
                if (p * power + q).abs() > 1e-12 {
                    return None;
                }
                let b = -p * log_exponent;
                if b <= 1.0 {
                    return Some(f64::INFINITY);
                }
                Some(q * koranyi_ball_volume(n) * cutoff.ln().powf(1.0 - b) / (b - 1.0))
            }
            LatticeSum { family, params } => {
                let lat = Lattice::new_unchecked(*family, *params);
                let mut acc = 0.0;
                lat.for_each_member(|_, k| acc += lat.weight(k).powf(p) * lat.support_measure(k));
                Some(acc)
            }
            Scale { c, inner } => inner.norm_pow_closed_form(p, n).map(|v| c.powf(p) * v),
            Dilate { s, inner } => inner.norm_pow_closed_form(p, n).map(|v| v * s.powf(-q)),
            Reflect { inner } => inner.norm_pow_closed_form(p, n),
            Sum { terms } if terms.is_empty() => Some(0.0),
            Sum { terms } if terms.len() == 1 => terms[0].norm_pow_closed_form(p, n),
            _ => None,
        }
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn check_len(c: &[f64], x: &GroupPoint) -> Result<()> {
    if c.len() != x.z().len() + 1 {
        return Err(Error::DimensionMismatch {
            expected: c.len() - 1,
            found: x.z().len(),
        });
    }
    Ok(())
}

/// Validated view of a lattice sum with per-index geometry.
#[derive(Debug, Clone, Copy)]
pub struct Lattice {
    pub family: LatticeFamily,
    pub params: LatticeParams,
}

impl Lattice {
    pub fn new(family: LatticeFamily, params: LatticeParams) -> Result<Self> {
        if params.n == 0 {
            return Err(invalid("n", "must be positive"));
        }
        if !(params.decay >= 3.0) {
            return Err(invalid("N", "must be >= 3"));
        }
        if !(params.exponent >= 1.0) {
            return Err(invalid("exponent", "must be >= 1"));
        }
        if !(params.truncation >= 1.0) || !params.truncation.is_finite() {
            return Err(invalid("truncation", "must be finite and >= 1"));
        }
        Ok(Self { family, params })
    }

    fn new_unchecked(family: LatticeFamily, params: LatticeParams) -> Self {
        Self { family, params }
    }

    pub fn q_dim(&self) -> f64 {
        (2 * self.params.n + 2) as f64
    }

    /// Whether an index of Koranyi norm `k` carries a term.
    pub fn admits(&self, k: f64) -> bool {
        let lower_ok = match self.family {
            LatticeFamily::A => k > 0.0,
            LatticeFamily::B | LatticeFamily::C => k > E,
        };
        lower_ok && k <= self.params.truncation
    }

    /// Strict lower bound on admitted norms.
    pub fn lower(&self) -> f64 {
        match self.family {
            LatticeFamily::A => 0.0,
            _ => E,
        }
    }

    /// Size parameter `r_a` of the support.
    pub fn radius(&self, k: f64) -> f64 {
        match self.family {
            LatticeFamily::A => k.powf(-self.params.decay - 1.0),
            _ => k.powf(-self.params.decay),
        }
    }

    pub fn weight(&self, k: f64) -> f64 {
        let p = &self.params;
        match self.family {
            LatticeFamily::A => k.powf(p.growth / p.exponent),
            _ => k.powf(self.q_dim() * (p.decay - 1.0) / p.exponent) * k.ln().powf(-2.0 / p.exponent),
        }
    }

    /// Haar measure of the support of the term at norm `k`.
    pub fn support_measure(&self, k: f64) -> f64 {
        let q = self.q_dim();
        let r = self.radius(k);
        match self.family {
            LatticeFamily::C => koranyi_ball_volume(self.params.n) * (2.0 * r).powf(q),
            _ => r.powf(q),
        }
    }

    /// The only index whose support can contain `x`.
    pub fn candidate(&self, x: &GroupPoint) -> LatticeIndex {
        let mut c: SmallVec<[i64; 7]> = SmallVec::new();
        match self.family {
            LatticeFamily::A | LatticeFamily::B => {
                c.extend(x.z().iter().map(|v| (v / 2.0).floor() as i64));
                c.push((x.t() / 2.0).floor() as i64);
            }
            LatticeFamily::C => {
                c.extend(x.z().iter().map(|v| v.round() as i64));
                let ah: Horizontal = c.iter().map(|&v| v as f64).collect();
                c.push((x.t() - 0.5 * twist(&ah, x.z())).round() as i64);
            }
        }
        LatticeIndex(c)
    }

    /// Whether `x` lies in the support set of index `a` (ignoring admission).
    pub fn support_contains(&self, a: &LatticeIndex, x: &GroupPoint) -> bool {
        let k = a.knorm();
        if k == 0.0 {
            return false;
        }
        let r = self.radius(k);
        match self.family {
            LatticeFamily::A | LatticeFamily::B => {
                a.horizontal()
                    .iter()
                    .zip(x.z())
                    .all(|(&aj, &zj)| (0.0..=r).contains(&(zj - 2.0 * aj as f64)))
                    && (0.0..=r * r).contains(&(x.t() - 2.0 * a.vertical() as f64))
            }
            LatticeFamily::C => {
                let c: Vec<f64> = a.0.iter().map(|&v| v as f64).collect();
                local_knorm(&c, x) < 2.0 * r
            }
        }
    }

    /// Uniform point of the support of index `a`.
    pub fn sample_support<R: Rng + ?Sized>(&self, a: &LatticeIndex, rng: &mut R) -> GroupPoint {
        let r = self.radius(a.knorm());
        match self.family {
            LatticeFamily::A | LatticeFamily::B => {
                // offsets far below the ulp of 2a can round past the far edge
                let inside = |base: f64, width: f64, u: f64| {
                    let mut v = base + width * u;
                    while v - base > width {
                        v = v.next_down();
                    }
                    v
                };
                let z: Horizontal = a
                    .horizontal()
                    .iter()
                    .map(|&aj| inside(2.0 * aj as f64, r, rng.gen::<f64>()))
                    .collect();
                let t = inside(2.0 * a.vertical() as f64, r * r, rng.gen::<f64>());
                GroupPoint::from_parts(z, t)
            }
            LatticeFamily::C => {
                // (2r)² can sit below the ulp of the anchor's t, so a·b may round out
                let anchor = a.as_point();
                for _ in 0..64 {
                    let x = &anchor * &uniform_in_ball(self.params.n, 2.0 * r, rng);
                    if self.support_contains(a, &x) {
                        return x;
                    }
                }
                anchor
            }
        }
    }

    pub fn evaluate(&self, x: &GroupPoint) -> Result<f64> {
        if x.z().len() != 2 * self.params.n {
            return Err(Error::DimensionMismatch {
                expected: 2 * self.params.n,
                found: x.z().len(),
            });
        }
        let a = self.candidate(x);
        let k = a.knorm();
        if !self.admits(k) || !self.support_contains(&a, x) {
            return Ok(0.0);
        }
        Ok(self.weight(k))
    }

    /// Visits every admitted index with its Koranyi norm.
    pub fn for_each_member(&self, mut visit: impl FnMut(&[i64], f64)) {
        let n = self.params.n;
        for_each_lattice_point(n, self.params.truncation, |a| {
            let m2: f64 = a[..2 * n].iter().map(|&c| (c * c) as f64).sum();
            let t = a[2 * n] as f64;
            let k = (m2 * m2 + t * t).sqrt().sqrt();
            if self.admits(k) {
                visit(a, k);
            }
        });
    }

    /// Admitted indices sorted by norm (ties broken lexicographically).
    pub fn members_sorted(&self, limit: usize) -> Vec<LatticeIndex> {
        // grow the enumeration ball until it holds `limit` members; every member
        // inside the ball is collected, so the first `limit` after sorting are exact
        let n = self.params.n;
        let top = self.params.truncation;
        let mut radius = (self.lower() + 1.0).min(top);
        let mut all: Vec<(f64, LatticeIndex)> = Vec::new();
        loop {
            all.clear();
            for_each_lattice_point(n, radius, |a| {
                let m2: f64 = a[..2 * n].iter().map(|&c| (c * c) as f64).sum();
                let t = a[2 * n] as f64;
                let k = (m2 * m2 + t * t).sqrt().sqrt();
                if self.admits(k) {
                    all.push((k, LatticeIndex(SmallVec::from_slice(a))));
                }
            });
            if all.len() >= limit || radius >= top {
                break;
            }
            radius = (2.0 * radius).min(top);
        }
        all.sort_by(|x, y| x.0.total_cmp(&y.0).then_with(|| x.1.cmp(&y.1)));
        all.into_iter().take(limit).map(|(_, a)| a).collect()
    }
}

/// Family (a): `(f, g)` with `f = Σ_{a≠0} |a|^{M/p} χ_{E_a}`, `g` likewise with `q`.
pub fn family_a_pair(params: &FamilyParams) -> Result<(TestFunction, TestFunction)> {
    params.check_common()?;
    let qd = params.q_dim();
    if !(params.growth < qd * params.decay) {
        return Err(invalid(
            "M",
            format!("M = {} must be below QN = {}", params.growth, qd * params.decay),
        ));
    }
    let make = |e| TestFunction::LatticeSum {
        family: LatticeFamily::A,
        params: params.with_exponent(e),
    };
    Ok((make(params.p), make(params.q)))
}

/// Family (b): `f = |y|^{-s} χ_{Q(0,1)}`, `g = Σ_{|a|>e} |a|^{Q(N-1)/q} (log|a|)^{-2/q} χ_{E_a}`.
pub fn family_b_pair(params: &FamilyParams, s: f64) -> Result<(TestFunction, TestFunction)> {
    params.check_common()?;
    let qd = params.q_dim();
    if !(s < qd / params.p) {
        return Err(invalid("s", format!("s = {s} must be below Q/p = {}", qd / params.p)));
    }
    let f = TestFunction::power(s, Some(TestFunction::cube(&GroupPoint::identity(params.n), 1.0)));
    let g = TestFunction::LatticeSum {
        family: LatticeFamily::B,
        params: params.with_exponent(params.q),
    };
    Ok((f, g))
}

/// Family (b) with the roles of the two inputs exchanged: the lattice sum
/// carries `p`, the power weight sits in the second slot with `s < Q/q`.
pub fn family_b_mirrored_pair(params: &FamilyParams, s: f64) -> Result<(TestFunction, TestFunction)> {
    let swapped = FamilyParams {
        p: params.q,
        q: params.p,
        ..*params
    };
    let (g, f) = family_b_pair(&swapped, s)?;
    Ok((f, g))
}

/// Family (c): lattice sums over `a · B(0, 2r_a)` with the log weights.
pub fn family_c_pair(params: &FamilyParams) -> Result<(TestFunction, TestFunction)> {
    params.check_common()?;
    let make = |e| TestFunction::LatticeSum {
        family: LatticeFamily::C,
        params: params.with_exponent(e),
    };
    Ok((make(params.p), make(params.q)))
}

/// Family (d): `|x|^{-Q/p} (log|x|)^{-τ₁} χ_{|x|>16}` and its `q`, `τ₂` analogue.
pub fn family_d_pair(n: usize, p: f64, q: f64, tau1: f64, tau2: f64) -> Result<(TestFunction, TestFunction)> {
    if n == 0 {
        return Err(invalid("n", "must be positive"));
    }
    if !(p >= 1.0) || !(q >= 1.0) {
        return Err(invalid("p", "exponents must be >= 1"));
    }
    if !(tau1 > 1.0 / p) {
        return Err(invalid("tau1", format!("{tau1} must exceed 1/p = {}", 1.0 / p)));
    }
    if !(tau2 > 1.0 / q) {
        return Err(invalid("tau2", format!("{tau2} must exceed 1/q = {}", 1.0 / q)));
    }
    let qd = (2 * n + 2) as f64;
    let make = |e: f64, tau: f64| TestFunction::LogPowerTail {
        power: -qd / e,
        log_exponent: -tau,
        cutoff: FAR_FIELD_CUTOFF,
    };
    Ok((make(p, tau1), make(q, tau2)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[f64]) -> GroupPoint {
        GroupPoint::from_coords(c).unwrap()
    }

    fn fam(n: usize, decay: f64, growth: f64, pe: f64, qe: f64, k: f64) -> FamilyParams {
        FamilyParams {
            n,
            decay,
            growth,
            p: pe,
            q: qe,
            truncation: k,
        }
    }

    #[test]
    fn ball_outside_support() {
        let f = TestFunction::unit_ball(1);
        assert_eq!(f.evaluate(&p(&[3.0, 4.0, 0.0])).unwrap(), 0.0);
        assert_eq!(f.evaluate(&p(&[0.1, 0.2, 0.1])).unwrap(), 1.0);
    }

    #[test]
    fn power_weight_value() {
        let f = TestFunction::power(2.0, None);
        // knorm((3,0,0)) = 3
        assert!((f.evaluate(&p(&[3.0, 0.0, 0.0])).unwrap() - 1.0 / 9.0).abs() < 1e-15);
        assert_eq!(f.evaluate(&GroupPoint::identity(1)), Err(Error::SingularPoint));
    }

    #[test]
    fn family_a_example() {
        let (f, g) = family_a_pair(&fam(1, 3.0, 1.0, 2.0, 2.0, 10.0)).unwrap();
        assert_eq!(f.evaluate(&p(&[2.5, 0.5, 0.5])).unwrap(), 1.0);
        assert_eq!(f.evaluate(&GroupPoint::identity(1)).unwrap(), 0.0);
        assert_eq!(f, g);
        let lat = Lattice::new(LatticeFamily::A, fam(1, 3.0, 1.0, 2.0, 2.0, 10.0).with_exponent(2.0)).unwrap();
        assert_eq!(lat.support_measure(1.0), 1.0);
    }

    #[test]
    fn family_constructors_reject() {
        assert!(family_a_pair(&fam(1, 3.0, 12.0, 2.0, 2.0, 5.0)).is_err());
        assert!(family_a_pair(&fam(1, 2.5, 1.0, 2.0, 2.0, 5.0)).is_err());
        assert!(family_b_pair(&fam(1, 3.0, 0.0, 2.0, 2.0, 5.0), 2.0).is_err());
        assert!(family_c_pair(&fam(1, 2.0, 0.0, 2.0, 2.0, 5.0)).is_err());
        assert!(family_d_pair(1, 2.0, 2.0, 0.5, 1.0).is_err());
        assert!(family_d_pair(1, 2.0, 2.0, 1.0, 0.4).is_err());
    }

    #[test]
    fn family_b_examples() {
        let (f, g) = family_b_pair(&fam(1, 3.0, 0.0, 2.0, 2.0, 10.0), 1.5).unwrap();
        // knorm ½ point in Q(0,1): (0.5, 0, 0)
        let v = f.evaluate(&p(&[0.5, 0.0, 0.0])).unwrap();
        assert!((v - 2f64.powf(1.5)).abs() < 1e-12);
        assert_eq!(g.evaluate(&p(&[1.0, 1.0, 0.5])).unwrap(), 0.0);
        let (f2, g2) = family_b_mirrored_pair(&fam(1, 3.0, 0.0, 2.0, 3.0, 10.0), 1.0).unwrap();
        assert!(matches!(f2, TestFunction::LatticeSum { .. }));
        assert!(matches!(g2, TestFunction::PowerWeight { .. }));
    }

    #[test]
    fn family_d_example() {
        let (f, _) = family_d_pair(1, 2.0, 2.0, 1.0, 1.0).unwrap();
        assert_eq!(f.evaluate(&p(&[8.0, 0.0, 0.0])).unwrap(), 0.0);
        let r = E.powi(4);
        let v = f.evaluate(&p(&[r, 0.0, 0.0])).unwrap();
        assert!((v - E.powi(-8) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn lattice_members_evaluate_to_weight() {
        let params = fam(1, 3.0, 2.0, 2.0, 2.0, 6.0);
        for family in [LatticeFamily::A, LatticeFamily::B, LatticeFamily::C] {
            let lat = Lattice::new(family, params.with_exponent(2.0)).unwrap();
            let f = TestFunction::LatticeSum {
                family,
                params: params.with_exponent(2.0),
            };
            let mut rng = crate::sampling::stream_rng(1, 1);
            for a in lat.members_sorted(40) {
                for _ in 0..20 {
                    let x = lat.sample_support(&a, &mut rng);
                    assert_eq!(lat.candidate(&x), a);
                    let w = lat.weight(a.knorm());
                    assert!((f.evaluate(&x).unwrap() - w).abs() <= 1e-12 * w);
                }
            }
        }
    }

    #[test]
    fn c_support_measure_ratio() {
        let lat = Lattice::new(LatticeFamily::C, fam(1, 3.0, 0.0, 2.0, 2.0, 6.0).with_exponent(2.0)).unwrap();
        let k = 4.0;
        let small = koranyi_ball_volume(1) * lat.radius(k).powi(4);
        assert!((lat.support_measure(k) / small - 16.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_norms() {
        let ball = TestFunction::unit_ball(1);
        let cq = koranyi_ball_volume(1);
        assert!((ball.norm_pow_closed_form(3.0, 1).unwrap() - cq).abs() < 1e-14);
        let (f, _) = family_d_pair(1, 2.0, 2.0, 1.0, 1.0).unwrap();
        let want = 4.0 * cq * 16f64.ln().powf(-1.0);
        assert!((f.norm_pow_closed_form(2.0, 1).unwrap() - want).abs() < 1e-12);
        let (fa, _) = family_a_pair(&fam(1, 3.0, 1.0, 2.0, 2.0, 3.0)).unwrap();
        // direct sum of |a|^{M - Q(N+1)}
        let mut direct = 0.0;
        for_each_lattice_point(1, 3.0, |a| {
            let k = LatticeIndex(SmallVec::from_slice(a)).knorm();
            if k > 0.0 {
                direct += k.powf(1.0 - 16.0);
            }
        });
        assert!((fa.norm_pow_closed_form(2.0, 1).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn descriptors_round_trip_through_toml() {
        let (f, g) = family_b_pair(&fam(1, 4.0, 0.0, 2.0, 2.0, 8.0), 0.5).unwrap();
        for d in [f, g, TestFunction::zero(), TestFunction::unit_ball(1).dilated(2.0).reflected()] {
            #[derive(Serialize, Deserialize)]
            struct W {
                f: TestFunction,
            }
            let s = toml::to_string(&W { f: d.clone() }).unwrap();
            let back: W = toml::from_str(&s).unwrap();
            assert_eq!(back.f, d);
        }
    }

    #[test]
    fn validate_catches_bad_descriptors() {
        assert!(TestFunction::unit_ball(2).validate(1).is_err());
        assert!(TestFunction::unit_ball(1).validate(1).is_ok());
        assert!(TestFunction::unit_ball(1).dilated(-1.0).validate(1).is_err());
    }
}
