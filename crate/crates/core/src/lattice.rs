//! Integer-lattice tiling `{Q_a = a · Q₀}` of ℍⁿ, `Q₀ = [0,1)²ⁿ⁺¹`, and its enlargements.
//!
//! Enlarged cubes `Q_a* = a · Q₀ · B(0,1) · Q₀⁻¹ · Q₀` are handled through the
//! closed-form superset `a · ([−4,4]²ⁿ × [−16,16])`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::group::{twist, GroupPoint, Horizontal};
use crate::sampling::uniform_in_ball;

/// Horizontal half-width of the enlarged-cube superset.
pub const ENLARGED_HALF_WIDTH: f64 = 4.0;
/// Vertical half-width of the enlarged-cube superset.
pub const ENLARGED_HALF_HEIGHT: f64 = 16.0;

/// An index `a ∈ ℤ²ⁿ⁺¹`; the last component is vertical.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticeIndex(pub SmallVec<[i64; 7]>);

impl LatticeIndex {
    pub fn new(components: &[i64]) -> Result<Self> {
        if components.len() < 3 || components.len().is_multiple_of(2) {
            return Err(Error::OddDimension(components.len().saturating_sub(1)));
        }
        Ok(Self(SmallVec::from_slice(components)))
    }

    pub fn horizontal(&self) -> &[i64] {
        &self.0[..self.0.len() - 1]
    }

    pub fn vertical(&self) -> i64 {
        self.0[self.0.len() - 1]
    }

    pub fn n(&self) -> usize {
        (self.0.len() - 1) / 2
    }

    /// The lattice point as an element of ℍⁿ.
    pub fn as_point(&self) -> GroupPoint {
        let z: Horizontal = self.horizontal().iter().map(|&c| c as f64).collect();
        GroupPoint::from_parts(z, self.vertical() as f64)
    }

    pub fn knorm(&self) -> f64 {
        self.as_point().knorm()
    }
}

/// Vertical coordinate of `(a', 0)⁻¹ · x`, i.e. `t − ½ Im(a' · z̄)`.
#[inline]
fn sheared_height(a_h: &[f64], x: &GroupPoint) -> f64 {
    x.t() - 0.5 * twist(a_h, x.z())
}

/// The unique `a` with `a⁻¹ · x ∈ Q₀`.
pub fn locate(x: &GroupPoint) -> LatticeIndex {
    let mut idx: SmallVec<[i64; 7]> = x.z().iter().map(|c| c.floor() as i64).collect();
    let a_h: Horizontal = idx.iter().map(|&c| c as f64).collect();
    idx.push(sheared_height(&a_h, x).floor() as i64);
    LatticeIndex(idx)
}

/// Whether `x ∈ Q_a`, i.e. `a⁻¹ · x ∈ [0,1)²ⁿ × [0,1)`.
///
/// The test is written as integer-part comparisons so that it agrees with
/// [`locate`] exactly in floating point.
pub fn cube_contains(a: &LatticeIndex, x: &GroupPoint) -> Result<bool> {
    let h = a.horizontal();
    if h.len() != x.z().len() {
        return Err(Error::DimensionMismatch {
            expected: h.len(),
            found: x.z().len(),
        });
    }
    if h.iter().zip(x.z()).any(|(&aj, &zj)| zj.floor() as i64 != aj) {
        return Ok(false);
    }
    let a_h: Horizontal = h.iter().map(|&c| c as f64).collect();
    Ok(sheared_height(&a_h, x).floor() as i64 == a.vertical())
}

/// Whether `x` lies in the superset `a · ([−4,4]²ⁿ × [−16,16])` of `Q_a*`.
pub fn enlarged_superset_contains(a: &LatticeIndex, x: &GroupPoint) -> Result<bool> {
    let h = a.horizontal();
    if h.len() != x.z().len() {
        return Err(Error::DimensionMismatch {
            expected: h.len(),
            found: x.z().len(),
        });
    }
    let local = &a.as_point().inverse() * x;
    Ok(local.z().iter().all(|c| c.abs() <= ENLARGED_HALF_WIDTH)
        && local.t().abs() <= ENLARGED_HALF_HEIGHT)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CubeKind {
    Plain,
    Enlarged,
}

/// Default search radius `⌈4√n⌉`.
pub fn default_radius(n: usize) -> u32 {
    (4.0 * (n as f64).sqrt()).ceil() as u32
}

/// Number of lattice indices near `locate(x)` whose cube (plain or enlarged
/// superset) contains `x`.
///
/// The window holds indices whose horizontal part is within `radius` of
/// `locate(x)` in every coordinate and whose vertical part is within `radius²`
/// of the sheared height.
pub fn overlap_count(x: &GroupPoint, radius: u32, kind: CubeKind) -> u64 {
    let home = locate(x);
    let r = radius as i64;
    match kind {
        CubeKind::Plain => {
            let mut count = 0;
            for_each_in_box(home.horizontal(), r, None, |a_h| {
                let a_hf: Horizontal = a_h.iter().map(|&c| c as f64).collect();
                let v = sheared_height(&a_hf, x).floor() as i64;
                let ok = a_h.iter().zip(x.z()).all(|(&aj, &zj)| zj.floor() as i64 == aj);
                if ok && (v - home.vertical()).abs() <= r * r {
                    count += 1;
                }
            });
            count
        }
        CubeKind::Enlarged => {
            let mut count: u64 = 0;
            for_each_in_box(home.horizontal(), r, Some(x.z()), |a_h| {
                let a_hf: Horizontal = a_h.iter().map(|&c| c as f64).collect();
                let w = sheared_height(&a_hf, x);
                let centre = w.floor() as i64;
                let lo = ((w - ENLARGED_HALF_HEIGHT).ceil() as i64).max(centre - r * r);
                let hi = ((w + ENLARGED_HALF_HEIGHT).floor() as i64).min(centre + r * r);
                if hi >= lo {
                    count += (hi - lo + 1) as u64;
                }
            });
            count
        }
    }
}

/// Visits every horizontal index within `r` of `centre` (sup-norm); when
/// `clip` is given, only those with `|zⱼ − aⱼ| ≤ 4`.
fn for_each_in_box(centre: &[i64], r: i64, clip: Option<&[f64]>, mut visit: impl FnMut(&[i64])) {
    let dim = centre.len();
    let mut lo = Vec::with_capacity(dim);
    let mut hi = Vec::with_capacity(dim);
    for j in 0..dim {
        let (mut l, mut h) = (centre[j] - r, centre[j] + r);
        if let Some(z) = clip {
            l = l.max((z[j] - ENLARGED_HALF_WIDTH).ceil() as i64);
            h = h.min((z[j] + ENLARGED_HALF_WIDTH).floor() as i64);
        }
        if l > h {
            return;
        }
        lo.push(l);
        hi.push(h);
    }
    let mut cur = lo.clone();
    loop {
        visit(&cur);
        let mut j = 0;
        loop {
            if j == dim {
                return;
            }
            if cur[j] < hi[j] {
                cur[j] += 1;
                break;
            }
            cur[j] = lo[j];
            j += 1;
        }
    }
}

/// A random point of `Q_a*` drawn through its defining product
/// `a · q₁ · b · q₂⁻¹ · q₃` with `qᵢ ∈ Q₀` and `b ∈ B(0,1)`.
pub fn sample_enlarged_cube<R: Rng + ?Sized>(a: &LatticeIndex, rng: &mut R) -> GroupPoint {
    let n = a.n();
    let mut unit = || {
        let z: Horizontal = (0..2 * n).map(|_| rng.gen::<f64>()).collect();
        let t = rng.gen::<f64>();
        GroupPoint::from_parts(z, t)
    };
    let q1 = unit();
    let q2 = unit();
    let q3 = unit();
    let b = uniform_in_ball(n, 1.0, rng);
    let p = &a.as_point() * &q1;
    let p = &p * &b;
    let p = &p * &q2.inverse();
    &p * &q3
}

/// Calls `visit(a)` for every `a ∈ ℤ²ⁿ⁺¹` with Koranyi norm `|a| ≤ radius`.
pub fn for_each_lattice_point(n: usize, radius: f64, mut visit: impl FnMut(&[i64])) {
    let r = radius.floor() as i64;
    let r4 = radius.powi(4);
    let centre = vec![0i64; 2 * n];
    let mut buf = vec![0i64; 2 * n + 1];
    for_each_in_box(&centre, r, None, |a_h| {
        let m2: i64 = a_h.iter().map(|c| c * c).sum();
        let rest = r4 - (m2 * m2) as f64;
        if rest < 0.0 {
            return;
        }
        let vmax = rest.sqrt().floor() as i64;
        buf[..2 * n].copy_from_slice(a_h);
        for v in -vmax..=vmax {
            buf[2 * n] = v;
            visit(&buf);
        }
    });
}

/// Largest `v ≥ 0` with `v² < x` (for `x > 0`).
fn isqrt_below(x: i128) -> i128 {
    debug_assert!(x > 0);
    let mut v = ((x as f64).sqrt()) as i128;
    while v * v >= x {
        v -= 1;
    }
    while (v + 1) * (v + 1) < x {
        v += 1;
    }
    v
}

/// `#{v ∈ ℤ : v² < x}`.
fn count_sq_below(x: i128) -> i128 {
    if x <= 0 {
        0
    } else {
        2 * isqrt_below(x) + 1
    }
}

/// One shell `lo4 ≤ |a|⁴ < hi4` of lattice points.
#[derive(Debug, Clone)]
pub struct LatticeShell {
    pub lo4: i128,
    pub hi4: i128,
    /// Indices into [`LatticeShells::horizontal`] with running counts.
    entries: Vec<(u32, u64)>,
    count: u64,
}

impl LatticeShell {
    pub fn count(&self) -> u64 {
        self.count
    }

    /// Inner Koranyi radius of the shell.
    pub fn inner_radius(&self) -> f64 {
        (self.lo4 as f64).powf(0.25)
    }
}

/// Lattice points with `lower < |a| ≤ upper`, split into unit-width Koranyi
/// shells `m ≤ |a| < m + 1`, supporting exact counts and uniform sampling.
///
/// Bounds are compared on the integer `|a|⁴ = |a'|⁴ + a_{2n+1}²`.
#[derive(Debug, Clone)]
pub struct LatticeShells {
    n: usize,
    horizontal: Vec<SmallVec<[i64; 6]>>,
    norms4: Vec<i128>,
    shells: Vec<LatticeShell>,
}

impl LatticeShells {
    /// `lower` is exclusive and `upper` inclusive.
    pub fn new(n: usize, lower: f64, upper: f64) -> Self {
        let up4 = upper.powi(4).floor() as i128;
        let low4 = lower.powi(4).floor() as i128;
        let r = upper.floor() as i64;
        let mut horizontal = Vec::new();
        let mut norms4 = Vec::new();
        for_each_in_box(&vec![0; 2 * n], r, None, |a_h| {
            let m2: i128 = a_h.iter().map(|&c| (c * c) as i128).sum();
            if m2 * m2 <= up4 {
                horizontal.push(SmallVec::from_slice(a_h));
                norms4.push(m2 * m2);
            }
        });
        let mut shells = Vec::new();
        let mut m = lower.floor().max(0.0) as i128;
        while (m * m * m * m) <= up4 {
            let lo4 = (m * m * m * m).max(low4 + 1);
            let hi4 = ((m + 1) * (m + 1) * (m + 1) * (m + 1)).min(up4 + 1);
            m += 1;
            if lo4 >= hi4 {
                continue;
            }
            let mut entries = Vec::new();
            let mut cum = 0u64;
            for (i, &h4) in norms4.iter().enumerate() {
                let c = count_sq_below(hi4 - h4) - count_sq_below(lo4 - h4);
                if c > 0 {
                    cum += c as u64;
                    entries.push((i as u32, cum));
                }
            }
            if cum > 0 {
                shells.push(LatticeShell {
                    lo4,
                    hi4,
                    entries,
                    count: cum,
                });
            }
        }
        Self {
            n,
            horizontal,
            norms4,
            shells,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn shells(&self) -> &[LatticeShell] {
        &self.shells
    }

    pub fn total(&self) -> u64 {
        self.shells.iter().map(|s| s.count).sum()
    }

    /// Uniformly random lattice point of `shell`.
    pub fn sample<R: Rng + ?Sized>(&self, shell: &LatticeShell, rng: &mut R) -> LatticeIndex {
        let k = rng.gen_range(0..shell.count);
        let pos = shell.entries.partition_point(|&(_, cum)| cum <= k);
        let (hi_idx, cum) = shell.entries[pos];
        let before = if pos == 0 { 0 } else { shell.entries[pos - 1].1 };
        let local = (k - before) as i128;
        debug_assert!(k < cum);
        let h4 = self.norms4[hi_idx as usize];
        // admissible v: lo4 - h4 <= v² < hi4 - h4
        let vmax = isqrt_below(shell.hi4 - h4);
        let low = shell.lo4 - h4;
        let v = if low <= 0 {
            local - vmax
        } else {
            let vmin = isqrt_below(low) + 1;
            let width = vmax - vmin + 1;
            if local < width {
                -vmax + local
            } else {
                vmin + (local - width)
            }
        };
        let mut c: SmallVec<[i64; 7]> = self.horizontal[hi_idx as usize].iter().copied().collect();
        c.push(v as i64);
        LatticeIndex(c)
    }
}

/// Lattice points sharing `(|a'|², |a_{2n+1}|)`; every weight of the lattice
/// families depends on `a` only through this pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormClass {
    pub horizontal_sq: i64,
    pub vertical_abs: i64,
    /// Number of lattice points in the class.
    pub multiplicity: u64,
    /// `|a|`.
    pub knorm: f64,
    /// `|2a|` for the Euclidean double `(2a', 2a_{2n+1})`.
    pub knorm_double: f64,
}

/// `r_{d}(m)`: representations of `m ≤ max` as a sum of `d` squares.
fn sum_of_squares_counts(d: usize, max: usize) -> Vec<u64> {
    let mut counts = vec![0u64; max + 1];
    counts[0] = 1;
    for _ in 0..d {
        let mut next = vec![0u64; max + 1];
        for (m, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let mut v: i64 = 0;
            while m + (v * v) as usize <= max {
                next[m + (v * v) as usize] += if v == 0 { c } else { 2 * c };
                v += 1;
            }
        }
        counts = next;
    }
    counts
}

/// Norm classes of the lattice points with `lower < |a| ≤ upper`, sorted by `|a|`.
pub fn norm_classes(n: usize, lower: f64, upper: f64) -> Vec<NormClass> {
    let up4 = upper.powi(4).floor() as i128;
    let low4 = if lower <= 0.0 { -1 } else { lower.powi(4).floor() as i128 };
    let max_m2 = upper.powi(2).floor() as usize;
    let reps = sum_of_squares_counts(2 * n, max_m2);
    let mut out = Vec::new();
    for (m2, &c) in reps.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let h4 = (m2 as i128) * (m2 as i128);
        if h4 > up4 {
            break;
        }
        let vmax = ((up4 - h4) as f64).sqrt() as i128 + 1;
        for v in 0..=vmax {
            let k4 = h4 + v * v;
            if k4 > up4 {
                break;
            }
            if k4 <= low4 {
                continue;
            }
            let mult = if v == 0 { c } else { 2 * c };
            let (m2f, vf) = (m2 as f64, v as f64);
            out.push(NormClass {
                horizontal_sq: m2 as i64,
                vertical_abs: v as i64,
                multiplicity: mult,
                knorm: (k4 as f64).sqrt().sqrt(),
                knorm_double: (16.0 * m2f * m2f + 4.0 * vf * vf).sqrt().sqrt(),
            });
        }
    }
    out.sort_by(|a, b| a.knorm.total_cmp(&b.knorm));
    out
}
