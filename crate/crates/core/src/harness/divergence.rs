//! Truncation scans for the counterexample families.
//!
//! A scan evaluates `‖S(f_K, g_K)‖_r / (‖f_K‖_p ‖g_K‖_q)` along increasing
//! truncation levels `K`. The numerator is integrated over a witness region on
//! which the operator reduces to a low-dimensional integral, so it is a lower
//! bound for the output norm; the input norms are exact or nearly so.
//!
//! For the lattice families the bump near `2a` has to meet itself under both
//! `x·y⁻¹` and `x·y`, which happens for the reflected input `f ∘ inv`. Since
//! reflection preserves every `Lᵖ` norm the witnesses below evaluate the
//! operator on the reflected slot.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exponents::{characterize, Classification, Condition, ExponentConfig, Verdict};
use crate::group::{koranyi_ball_volume, GroupPoint, Horizontal};
use crate::harness::report::ExperimentReport;
use crate::lattice::{norm_classes, NormClass};
use crate::quadrature::{EstimateWithError, ShellSampler};
use crate::sampling::{mix, stream_rng, unit_sphere_point, uniform_in_ball};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "a")]
    A,
    #[serde(rename = "b")]
    B,
    #[serde(rename = "b-mirrored")]
    BMirrored,
    #[serde(rename = "c")]
    C,
    #[serde(rename = "d")]
    D,
}

impl Family {
    pub const ALL: [Family; 5] = [Family::A, Family::B, Family::BMirrored, Family::C, Family::D];

    pub fn name(self) -> &'static str {
        match self {
            Family::A => "a",
            Family::B => "b",
            Family::BMirrored => "b-mirrored",
            Family::C => "c",
            Family::D => "d",
        }
    }

    /// The single condition a configuration must violate for this family.
    pub fn target(self) -> Condition {
        match self {
            Family::A => Condition::III,
            Family::B => Condition::I,
            Family::BMirrored => Condition::II,
            Family::C => Condition::IV,
            Family::D => Condition::RVsPq,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| invalid("family", format!("unknown family {s:?}")))
    }
}

fn default_decay() -> f64 {
    4.0
}
fn default_truncations() -> Vec<f64> {
    vec![8.0, 16.0, 32.0]
}
fn default_growth_factor() -> f64 {
    1.5
}
fn default_outer() -> usize {
    2000
}
fn default_inner() -> usize {
    2000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    #[serde(rename = "N", default = "default_decay")]
    pub decay: f64,
    /// Growth exponent of family (a).
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub growth: Option<f64>,
    /// Power of the local singularity in family (b).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    /// Log-exponent excess of family (d): `τ₁ = 1/p + ε`, `τ₂ = 1/q + ε`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default = "default_truncations")]
    pub truncations: Vec<f64>,
    /// Minimum ratio growth per doubling of `K` for a "diverging" verdict.
    #[serde(default = "default_growth_factor")]
    pub growth_factor: f64,
    /// Proposals per outer stratum (`x` samples).
    #[serde(default = "default_outer")]
    pub outer_samples: usize,
    /// Samples of each inner integral.
    #[serde(default = "default_inner")]
    pub inner_samples: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            decay: default_decay(),
            growth: None,
            s: None,
            epsilon: None,
            truncations: default_truncations(),
            growth_factor: default_growth_factor(),
            outer_samples: default_outer(),
            inner_samples: default_inner(),
            seed: 0,
        }
    }
}

impl ScanConfig {
    /// A configuration on `ℍ¹` with `λ = 1` that violates exactly the
    /// family's target condition.
    pub fn preset(family: Family) -> (ExponentConfig, ScanConfig) {
        let mut cfg = ScanConfig::default();
        let exps = match family {
            Family::A => {
                cfg.growth = Some(15.5);
                ExponentConfig::new(1, 1.0, 1.6, 1.6, -1.75, -1.75, 4.0)
            }
            Family::B => {
                cfg.s = Some(0.06);
                ExponentConfig::new(1, 1.0, 25.0, 2.0, 3.64, -1.8, -1.8)
            }
            Family::BMirrored => {
                cfg.s = Some(0.06);
                ExponentConfig::new(1, 1.0, 2.0, 25.0, -1.8, 3.64, -1.8)
            }
            Family::C => ExponentConfig::new(1, 1.0, 2.0, 2.0, 0.0, 0.0, -1.0),
            Family::D => {
                cfg.epsilon = Some(0.25);
                ExponentConfig::new(1, 1.0, 2.0, 2.0, 1.5, 1.5, 6.0)
            }
        };
        (exps.expect("preset exponents are valid"), cfg)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.decay.is_finite() && self.decay > 0.0) {
            return Err(invalid("N", "must be positive"));
        }
        if self.truncations.is_empty() {
            return Err(invalid("truncations", "empty"));
        }
        if self.truncations.iter().any(|k| !(k.is_finite() && *k >= 4.0)) {
            return Err(invalid("truncations", "every level must be at least 4"));
        }
        if self.truncations.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("truncations", "must be strictly increasing"));
        }
        if !(self.growth_factor.is_finite() && self.growth_factor > 1.0) {
            return Err(invalid("growth_factor", "must exceed 1"));
        }
        if self.outer_samples < 100 || self.inner_samples < 100 {
            return Err(invalid("samples", "need at least 100 outer and inner samples"));
        }
        Ok(())
    }
}

/// Checks that `exps` violates exactly the condition targeted by `family`.
pub fn check_pairing(family: Family, exps: &ExponentConfig) -> Result<Classification> {
    let cl = characterize(exps);
    let expected_verdict = match family {
        Family::D => Verdict::Inadmissible,
        _ => Verdict::Unbounded,
    };
    if cl.verdict == expected_verdict && cl.witnesses == [family.target()] {
        return Ok(cl);
    }
    let violated = if cl.witnesses.is_empty() {
        "none".to_owned()
    } else {
        cl.witness_names().join(",")
    };
    Err(Error::FamilyMismatch {
        family: family.name().to_owned(),
        violated,
    })
}

/// One truncation level of a scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub truncation: f64,
    pub numerator: EstimateWithError,
    pub f_norm: EstimateWithError,
    pub g_norm: EstimateWithError,
    pub ratio: EstimateWithError,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub family: Family,
    pub points: Vec<ScanPoint>,
    /// `ratio(K_{i+1}) / ratio(K_i)`.
    pub step_factors: Vec<f64>,
    /// Least-squares slope of `log ratio` against `log K`.
    pub slope: f64,
    pub diverging: bool,
}

/// `value^{1/r}` with first-order error propagation.
fn root(e: EstimateWithError, r: f64) -> EstimateWithError {
    let v = e.value.powf(1.0 / r);
    let se = if e.value > 0.0 { v * e.std_error / (r * e.value) } else { 0.0 };
    EstimateWithError {
        value: v,
        std_error: se,
        samples_used: e.samples_used,
    }
}

fn ratio_of(num: EstimateWithError, f: EstimateWithError, g: EstimateWithError) -> EstimateWithError {
    let value = num.value / (f.value * g.value);
    let rel = [num, f, g]
        .iter()
        .map(|e| e.relative_error().powi(2))
        .sum::<f64>()
        .sqrt();
    EstimateWithError {
        value,
        std_error: value.abs() * rel,
        samples_used: num.samples_used,
    }
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
    (mean, (var / m).sqrt())
}

/// Exact Haar volume of `{2^j ≤ |x| < 2^{j+1}}`.
fn shell_volume(n: usize, j: i32) -> f64 {
    let q = (2 * n + 2) as i32;
    koranyi_ball_volume(n) * 2f64.powi(q * j) * (2f64.powi(q) - 1.0)
}

/// `∫ h` over the shell `2^j ≤ |x| < 2^{j+1}` as exact volume times the mean
/// over accepted proposals.
fn shell_integral<H>(n: usize, j: i32, proposals: usize, rng: ChaCha8Rng, h: H) -> EstimateWithError
where
    H: Fn(&GroupPoint, u64) -> f64 + Sync,
{
    let mut sampler = ShellSampler::with_rng(n, -j - 1, proposals, rng);
    let mut pts = Vec::new();
    while let Some(p) = sampler.propose() {
        if let Some(x) = p {
            pts.push(x);
        }
    }
    let vals: Vec<f64> = pts
        .par_iter()
        .enumerate()
        .map(|(i, x)| h(x, i as u64))
        .collect();
    let (mean, se) = mean_and_se(&vals);
    let vol = shell_volume(n, j);
    EstimateWithError {
        value: vol * mean,
        std_error: vol * se,
        samples_used: vals.len() as u64,
    }
}

/// Points `δ_ρ(ω)` with `ρ ∈ [0, R]` of density `∝ ρ^{m−1}` and `ω` on the
/// unit sphere; `fold` maps `ω` into the positive orthant. Returns the points
/// and the factor turning a sample mean of `h` into `∫_{|y|<R} h(y) |y|^{m−Q} dy`.
fn radial_points(n: usize, m: f64, radius: f64, fold: bool, count: usize, rng: &mut ChaCha8Rng) -> (Vec<GroupPoint>, f64) {
    let q = (2 * n + 2) as f64;
    let pts = (0..count)
        .map(|_| {
            let w = unit_sphere_point(n, rng);
            let rho = radius * rng.gen::<f64>().powf(1.0 / m);
            let z: Horizontal = w
                .z()
                .iter()
                .map(|c| rho * if fold { c.abs() } else { *c })
                .collect();
            let t = rho * rho * if fold { w.t().abs() } else { w.t() };
            GroupPoint::from_parts(z, t)
        })
        .collect();
    let mut z = radius.powf(m) / m * q * koranyi_ball_volume(n);
    if fold {
        z /= 2f64.powi(2 * n as i32 + 1);
    }
    (pts, z)
}

/// Binomial estimate of `Z · P(hit)`.
fn hit_estimate(z: f64, hits: usize, total: usize) -> EstimateWithError {
    let p = hits as f64 / total as f64;
    EstimateWithError {
        value: z * p,
        std_error: z * (p * (1.0 - p) / total as f64).sqrt(),
        samples_used: total as u64,
    }
}

/// Per-class data of family (a): bump radius, operator coefficient, norm term.
struct PlanA {
    knorm: Vec<f64>,
    /// `prefix[d][i] = Σ_{c<i} coef_c · r_c^d`.
    prefix: Vec<Vec<f64>>,
    norm_prefix: Vec<f64>,
}

/// Sums over lattice classes shared by families (b) and (c).
struct PlanLattice {
    knorm: Vec<f64>,
    /// Prefix sums of the witness terms.
    witness_prefix: Vec<f64>,
    /// Prefix sums of `mult · |a|^{−Q} (log|a|)^{−2}`.
    norm_prefix: Vec<f64>,
}

enum Plan {
    A(PlanA),
    Lattice(PlanLattice),
    D,
}

/// A scan whose deterministic lattice sums are built once and reused across seeds.
pub struct PreparedScan {
    family: Family,
    exps: ExponentConfig,
    cfg: ScanConfig,
    classification: Classification,
    plan: Plan,
}

fn prefix(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut acc = 0.0;
    for v in values {
        acc += v;
        out.push(acc);
    }
    out
}

impl PreparedScan {
    pub fn new(family: Family, exps: &ExponentConfig, cfg: &ScanConfig) -> Result<Self> {
        exps.validate()?;
        cfg.validate()?;
        let classification = check_pairing(family, exps)?;
        let n = exps.n;
        let q = exps.q_dim();
        let big_n = cfg.decay;
        let kmax = *cfg.truncations.last().expect("validated");
        let plan = match family {
            Family::A => {
                let m = cfg.growth.ok_or_else(|| invalid("M", "required for family a"))?;
                if !(m.is_finite() && m < q * big_n) {
                    return Err(invalid("M", format!("need M < QN = {}", q * big_n)));
                }
                if m * (1.0 / exps.p + 1.0 / exps.q) <= q * big_n {
                    return Err(invalid("M", "need M(1/p + 1/q) > QN"));
                }
                let (a, b, l) = (exps.alpha, exps.beta, exps.lambda);
                let classes = norm_classes(n, 0.0, kmax);
                let classes: Vec<&NormClass> = classes.iter().filter(|c| c.knorm > 0.0).collect();
                let lead = m * (1.0 / exps.p + 1.0 / exps.q);
                let coef: Vec<f64> = classes
                    .iter()
                    .map(|c| {
                        (c.multiplicity as f64).ln() + lead * c.knorm.ln() + (l - q - a - b) * c.knorm_double.ln()
                    })
                    .collect();
                let radius: Vec<f64> = classes.iter().map(|c| -(big_n + 1.0) * c.knorm.ln()).collect();
                let degree = 2 * n + 2;
                let prefix_tables = (0..=degree)
                    .map(|d| prefix(coef.iter().zip(&radius).map(|(c, r)| (c + d as f64 * r).exp())))
                    .collect();
                let norm_prefix = prefix(
                    classes
                        .iter()
                        .map(|c| c.multiplicity as f64 * c.knorm.powf(m - q * (big_n + 1.0))),
                );
                Plan::A(PlanA {
                    knorm: classes.iter().map(|c| c.knorm).collect(),
                    prefix: prefix_tables,
                    norm_prefix,
                })
            }
            Family::B | Family::BMirrored | Family::C => {
                let classes = norm_classes(n, std::f64::consts::E, kmax);
                let r = exps.derived_r()?.r;
                let (a, b, g, l) = (exps.alpha, exps.beta, exps.gamma, exps.lambda);
                let cq = koranyi_ball_volume(n);
                let term = |c: &NormClass| -> f64 {
                    let k = c.knorm;
                    let lk = k.ln();
                    let ln_r = -big_n * lk;
                    let inner = match family {
                        Family::C => {
                            let w = (q * (big_n - 1.0) * lk - 2.0 * lk.ln()) * (1.0 / exps.p + 1.0 / exps.q);
                            (-g - a - b) * lk + w + l * ln_r
                        }
                        _ => {
                            let (lat_exp, lat_w, power_w) = if family == Family::B {
                                (exps.q, b, a)
                            } else {
                                (exps.p, a, b)
                            };
                            let sigma = cfg.s.unwrap_or(0.0) + power_w;
                            let w = (q * (big_n - 1.0) * lk - 2.0 * lk.ln()) / lat_exp;
                            -g * lk + w + (q - sigma) * ln_r - lat_w * c.knorm_double.ln() + (l - q) * lk
                        }
                    };
                    let vol = if family == Family::C { cq * (q * ln_r).exp() } else { (q * ln_r).exp() };
                    c.multiplicity as f64 * vol * (r * inner).exp()
                };
                if family != Family::C {
                    let s = cfg.s.ok_or_else(|| invalid("s", "required for family b"))?;
                    let (p_power, power_w) = if family == Family::B {
                        (exps.p, a)
                    } else {
                        (exps.q, b)
                    };
                    if !(s >= 0.0 && s < q / p_power) {
                        return Err(invalid("s", format!("need 0 ≤ s < {}", q / p_power)));
                    }
                    if s + power_w >= q {
                        return Err(invalid("s", "local singularity is not integrable"));
                    }
                }
                Plan::Lattice(PlanLattice {
                    knorm: classes.iter().map(|c| c.knorm).collect(),
                    witness_prefix: prefix(classes.iter().map(term)),
                    norm_prefix: prefix(
                        classes
                            .iter()
                            .map(|c| c.multiplicity as f64 * c.knorm.powf(-q) * c.knorm.ln().powi(-2)),
                    ),
                })
            }
            Family::D => {
                let eps = cfg.epsilon.ok_or_else(|| invalid("epsilon", "required for family d"))?;
                if !(eps > 0.0 && eps.is_finite()) {
                    return Err(invalid("epsilon", "must be positive"));
                }
                Plan::D
            }
        };
        Ok(Self {
            family,
            exps: *exps,
            cfg: cfg.clone(),
            classification,
            plan,
        })
    }

    pub fn classification(&self) -> &Classification {
        &self.classification
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn config(&self) -> &ScanConfig {
        &self.cfg
    }

    /// Runs the scan with the given seed.
    pub fn run(&self, seed: u64) -> Result<ScanResult> {
        let points = match &self.plan {
            Plan::A(plan) => self.run_a(plan, seed),
            Plan::Lattice(plan) => self.run_lattice(plan, seed),
            Plan::D => self.run_d(seed),
        }?;
        Ok(self.summarise(points))
    }

    fn summarise(&self, points: Vec<ScanPoint>) -> ScanResult {
        let step_factors: Vec<f64> = points.windows(2).map(|w| w[1].ratio.value / w[0].ratio.value).collect();
        let diverging = !step_factors.is_empty()
            && points.windows(2).zip(&step_factors).all(|(w, f)| {
                let doublings = (w[1].truncation / w[0].truncation).log2();
                *f >= self.cfg.growth_factor.powf(doublings)
            });
        let xs: Vec<f64> = points.iter().map(|p| p.truncation.ln()).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.ratio.value.ln()).collect();
        let m = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let slope = if sxx > 0.0 { sxy / sxx } else { f64::NAN };
        ScanResult {
            family: self.family,
            points,
            step_factors,
            slope,
            diverging,
        }
    }

    /// Family (a): for small `x` the bumps `E_a x` and `x⁻¹ E_a` overlap in a
    /// box of volume `Π(r_a − 2|x_j|)₊ · (r_a² − 2|x_t|)₊`; the kernel is frozen
    /// at `|2a|`.
    fn run_a(&self, plan: &PlanA, seed: u64) -> Result<Vec<ScanPoint>> {
        let e = &self.exps;
        let n = e.n;
        let q = e.q_dim();
        let r = e.derived_r()?.r;
        let big_n = self.cfg.decay;
        let cq = koranyi_ball_volume(n);
        let cap_exp = q - e.gamma * r;
        self.cfg
            .truncations
            .iter()
            .enumerate()
            .map(|(ti, &kt)| {
                let end = plan.knorm.partition_point(|&k| k <= kt);
                let j_lo = (-(big_n + 1.0) * kt.log2()).floor() as i32 - 10;
                let j_hi = -4;
                let eval = |x: &GroupPoint, _: u64| -> f64 {
                    let b: Vec<f64> = x.z().iter().map(|c| 2.0 * c.abs()).collect();
                    let bt = 2.0 * x.t().abs();
                    let rho = b.iter().fold(bt.sqrt(), |m, v| m.max(*v));
                    let kcut = rho.powf(-1.0 / (big_n + 1.0));
                    let idx = plan.knorm.partition_point(|&k| k < kcut).min(end);
                    // Π (r − b_j) · (r² − b_t) as coefficients in r
                    let mut poly = vec![1.0];
                    for bj in &b {
                        let mut next = vec![0.0; poly.len() + 1];
                        for (d, c) in poly.iter().enumerate() {
                            next[d + 1] += c;
                            next[d] -= c * bj;
                        }
                        poly = next;
                    }
                    let mut full = vec![0.0; poly.len() + 2];
                    for (d, c) in poly.iter().enumerate() {
                        full[d + 2] += c;
                        full[d] -= c * bt;
                    }
                    let s: f64 = full.iter().enumerate().map(|(d, c)| c * plan.prefix[d][idx]).sum();
                    (x.knorm().powf(-e.gamma) * s.max(0.0)).powf(r)
                };
                let mut total = EstimateWithError::ZERO;
                for j in j_lo..=j_hi {
                    let rng = stream_rng(seed, mix(((ti as u64) << 32) ^ (j as i64 as u64)));
                    total = total + shell_integral(n, j, self.cfg.outer_samples, rng, eval);
                }
                let cap = if cap_exp > 0.0 {
                    let c0 = plan.prefix[2 * n + 2][end];
                    c0.powf(r) * q * cq * 2f64.powf(j_lo as f64 * cap_exp) / cap_exp
                } else {
                    f64::INFINITY
                };
                total.value += cap;
                let numerator = root(total, r);
                let series = plan.norm_prefix[end];
                let f_norm = EstimateWithError::exact(series.powf(1.0 / e.p));
                let g_norm = EstimateWithError::exact(series.powf(1.0 / e.q));
                Ok(ScanPoint {
                    truncation: kt,
                    numerator,
                    f_norm,
                    g_norm,
                    ratio: ratio_of(numerator, f_norm, g_norm),
                })
            })
            .collect()
    }

    /// Families (b) and (c): the witness integral factors into a lattice sum
    /// times a `K`-independent local integral.
    fn run_lattice(&self, plan: &PlanLattice, seed: u64) -> Result<Vec<ScanPoint>> {
        let e = &self.exps;
        let n = e.n;
        let q = e.q_dim();
        let r = e.derived_r()?.r;
        let cq = koranyi_ball_volume(n);
        let inner = self.cfg.inner_samples;
        let outer = self.cfg.outer_samples;
        let mut rng = stream_rng(seed, 0xB0B);
        let (local, power_norm) = match self.family {
            Family::C => {
                // H(v) = ∫_{|y|<3} χ(|v y| < 2) χ(|v y⁻¹| < 2) |y|^{λ−Q} dy, v ∈ B(0,1)
                let (ys, z) = radial_points(n, e.lambda, 3.0, false, inner, &mut rng);
                let vs: Vec<GroupPoint> = (0..outer).map(|_| uniform_in_ball(n, 1.0, &mut rng)).collect();
                let vals: Vec<f64> = vs
                    .par_iter()
                    .map(|v| {
                        let hits = ys
                            .iter()
                            .filter(|y| v.mul_unchecked(y).knorm() < 2.0 && v.mul_unchecked(&y.inverse()).knorm() < 2.0)
                            .count();
                        (z * hits as f64 / inner as f64).powf(r)
                    })
                    .collect();
                let (mean, se) = mean_and_se(&vals);
                (
                    EstimateWithError {
                        value: mean,
                        std_error: se,
                        samples_used: outer as u64,
                    },
                    None,
                )
            }
            _ => {
                let s = self.cfg.s.expect("validated");
                let (p_power, power_w) = if self.family == Family::B {
                    (e.p, e.alpha)
                } else {
                    (e.q, e.beta)
                };
                let sigma = s + power_w;
                let reach = (4.0 * (n * n) as f64 + 1.0).sqrt().sqrt();
                let (etas, z) = radial_points(n, q - sigma, reach, true, inner, &mut rng);
                let dim = 2 * n + 1;
                let ws: Vec<Vec<f64>> = (0..outer)
                    .map(|_| (0..dim).map(|_| 0.25 * rng.gen::<f64>()).collect())
                    .collect();
                let coords: Vec<Vec<f64>> = etas.iter().map(|p| p.coords()).collect();
                let vals: Vec<f64> = ws
                    .par_iter()
                    .map(|w| {
                        let hits = coords
                            .iter()
                            .filter(|c| c.iter().zip(w).all(|(ci, wi)| *ci <= 1.0 - 2.0 * wi))
                            .count();
                        (z * hits as f64 / inner as f64).powf(r)
                    })
                    .collect();
                let (mean, se) = mean_and_se(&vals);
                let box_vol = 0.25f64.powi(dim as i32);
                let local = EstimateWithError {
                    value: mean * box_vol,
                    std_error: se * box_vol,
                    samples_used: outer as u64,
                };
                // ∫_{[0,1]^{2n+1}} |u|^{−s p} du
                let (us, zp) = radial_points(n, q - s * p_power, reach, true, inner, &mut rng);
                let hits = us
                    .iter()
                    .filter(|u| u.z().iter().all(|c| *c <= 1.0) && u.t() <= 1.0)
                    .count();
                (local, Some(root(hit_estimate(zp, hits, inner), p_power)))
            }
        };
        let points = self
            .cfg
            .truncations
            .iter()
            .map(|&kt| {
                let end = plan.knorm.partition_point(|&k| k <= kt);
                let series = plan.witness_prefix[end];
                let numerator = root(local.scale(series), r);
                let lattice_sum = plan.norm_prefix[end];
                let (f_norm, g_norm) = match (self.family, power_norm) {
                    (Family::C, _) => {
                        let base = cq * 2f64.powf(q) * lattice_sum;
                        (
                            EstimateWithError::exact(base.powf(1.0 / e.p)),
                            EstimateWithError::exact(base.powf(1.0 / e.q)),
                        )
                    }
                    (Family::B, Some(pn)) => (pn, EstimateWithError::exact(lattice_sum.powf(1.0 / e.q))),
                    (_, Some(pn)) => (EstimateWithError::exact(lattice_sum.powf(1.0 / e.p)), pn),
                    _ => unreachable!("power norm is computed for family b"),
                };
                ScanPoint {
                    truncation: kt,
                    numerator,
                    f_norm,
                    g_norm,
                    ratio: ratio_of(numerator, f_norm, g_norm),
                }
            })
            .collect();
        Ok(points)
    }

    /// Family (d): `x` in dyadic shells beyond 32, `y ∈ B(0, |x|/2)`.
    fn run_d(&self, seed: u64) -> Result<Vec<ScanPoint>> {
        let e = &self.exps;
        let n = e.n;
        let q = e.q_dim();
        let r = e.derived_r()?.r;
        let eps = self.cfg.epsilon.expect("validated");
        let (tau1, tau2) = (1.0 / e.p + eps, 1.0 / e.q + eps);
        let cq = koranyi_ball_volume(n);
        let inner = self.cfg.inner_samples;
        let lam = e.lambda;
        self.cfg
            .truncations
            .iter()
            .enumerate()
            .map(|(ti, &kt)| {
                let top = 16.0 * kt;
                let profile = |u: f64, p: f64, tau: f64, w: f64| -> f64 {
                    if u > 16.0 && u < top {
                        u.powf(-q / p - w) * u.ln().powf(-tau)
                    } else {
                        0.0
                    }
                };
                let j_hi = (2.0 * top).log2().ceil() as i32 - 1;
                let mut total = EstimateWithError::ZERO;
                for j in 5..=j_hi {
                    let stream = mix(((ti as u64) << 32) ^ (j as u64));
                    let rng = stream_rng(seed, stream);
                    let eval = |x: &GroupPoint, i: u64| -> f64 {
                        let mut irng = stream_rng(seed ^ stream, i);
                        let xn = x.knorm();
                        let (ys, z) = radial_points(n, lam, xn / 2.0, false, inner, &mut irng);
                        let sum: f64 = ys
                            .iter()
                            .map(|y| {
                                let left = x.mul_unchecked(&y.inverse()).knorm();
                                let right = x.mul_unchecked(y).knorm();
                                profile(left, e.p, tau1, e.alpha) * profile(right, e.q, tau2, e.beta)
                            })
                            .sum();
                        (xn.powf(-e.gamma) * z * sum / inner as f64).powf(r)
                    };
                    total = total + shell_integral(n, j, self.cfg.outer_samples, rng, eval);
                }
                let numerator = root(total, r);
                let log_norm = |p: f64, tau: f64| -> f64 {
                    let a = p * tau - 1.0;
                    let v = q * cq * (16f64.ln().powf(-a) - top.ln().powf(-a)) / a;
                    v.powf(1.0 / p)
                };
                let f_norm = EstimateWithError::exact(log_norm(e.p, tau1));
                let g_norm = EstimateWithError::exact(log_norm(e.q, tau2));
                Ok(ScanPoint {
                    truncation: kt,
                    numerator,
                    f_norm,
                    g_norm,
                    ratio: ratio_of(numerator, f_norm, g_norm),
                })
            })
            .collect()
    }
}

/// Runs a scan and renders it as a report.
pub fn divergence_scan(family: Family, exps: &ExponentConfig, cfg: &ScanConfig) -> Result<ExperimentReport> {
    let prepared = PreparedScan::new(family, exps, cfg)?;
    let res = prepared.run(cfg.seed)?;
    let mut rep = ExperimentReport::new(
        "divergence",
        &[
            "truncation",
            "numerator",
            "numerator_se",
            "f_norm",
            "f_norm_se",
            "g_norm",
            "g_norm_se",
            "ratio",
            "ratio_se",
            "step_factor",
        ],
    );
    rep.echo("exponents", exps)?;
    rep.echo("family", cfg)?;
    for (i, p) in res.points.iter().enumerate() {
        let step = if i == 0 { f64::NAN } else { res.step_factors[i - 1] };
        rep.push_row(vec![
            p.truncation.into(),
            p.numerator.value.into(),
            p.numerator.std_error.into(),
            p.f_norm.value.into(),
            p.f_norm.std_error.into(),
            p.g_norm.value.into(),
            p.g_norm.std_error.into(),
            p.ratio.value.into(),
            p.ratio.std_error.into(),
            step.into(),
        ]);
    }
    rep.set("family", family.name());
    rep.set("violated", prepared.classification().witness_names().join(","));
    rep.set("slope", res.slope);
    rep.set("diverging", res.diverging);
    rep.verdict = Some(if res.diverging { "diverging" } else { "not diverging" }.to_owned());
    rep.notes.push("numerator integrates the output over a witness region and is a lower bound".into());
    match family {
        Family::A | Family::B => rep.notes.push("first input evaluated as f ∘ inv".into()),
        Family::BMirrored => rep.notes.push("second input evaluated as g ∘ inv".into()),
        _ => {}
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(family: Family) -> (ExponentConfig, ScanConfig) {
        let (e, mut c) = ScanConfig::preset(family);
        c.outer_samples = 400;
        c.inner_samples = 400;
        (e, c)
    }

    #[test]
    fn presets_pair_with_their_families() {
        for f in Family::ALL {
            let (e, _) = ScanConfig::preset(f);
            check_pairing(f, &e).unwrap();
            for g in Family::ALL.into_iter().filter(|g| *g != f) {
                assert!(matches!(check_pairing(g, &e), Err(Error::FamilyMismatch { .. })), "{f} vs {g}");
            }
        }
    }

    #[test]
    fn family_names_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
        assert!("e".parse::<Family>().is_err());
    }

    #[test]
    fn family_a_norm_series_matches_enumeration() {
        let (e, mut c) = quick(Family::A);
        c.truncations = vec![4.0, 6.0];
        let prep = PreparedScan::new(Family::A, &e, &c).unwrap();
        let Plan::A(plan) = &prep.plan else { unreachable!() };
        let end = plan.knorm.partition_point(|&k| k <= 6.0);
        let mut brute = 0.0;
        crate::lattice::for_each_lattice_point(1, 6.0, |a| {
            let k = crate::lattice::LatticeIndex::new(a).unwrap().knorm();
            if k > 0.0 {
                brute += k.powf(15.5 - 20.0);
            }
        });
        assert!((plan.norm_prefix[end] - brute).abs() < 1e-12 * brute);
    }

    #[test]
    fn family_c_local_integral_oracle() {
        // v = 0 gives the full ball |y| < 2: ∫ |y|^{λ−Q} = Q C_Q 2^λ / λ
        let n = 1;
        let mut rng = stream_rng(1, 1);
        let (ys, z) = radial_points(n, 1.0, 3.0, false, 40_000, &mut rng);
        let hits = ys.iter().filter(|y| y.knorm() < 2.0).count();
        let est = hit_estimate(z, hits, ys.len());
        let exact = 4.0 * koranyi_ball_volume(1) * 2.0;
        assert!(est.agrees_with(exact, 4.0), "{est:?} vs {exact}");
    }

    #[test]
    fn reproducible_for_a_seed() {
        let (e, c) = quick(Family::C);
        let p = PreparedScan::new(Family::C, &e, &c).unwrap();
        assert_eq!(p.run(3).unwrap(), p.run(3).unwrap());
    }

    #[test]
    fn lattice_families_diverge() {
        for f in [Family::A, Family::B, Family::C] {
            let (e, c) = quick(f);
            let res = PreparedScan::new(f, &e, &c).unwrap().run(1).unwrap();
            assert!(res.diverging, "{f}: {:?}", res.step_factors);
            assert!(res.slope > 1.0);
        }
    }

    #[test]
    fn rejects_bad_side_parameters() {
        let (e, mut c) = ScanConfig::preset(Family::A);
        c.growth = Some(17.0);
        assert!(PreparedScan::new(Family::A, &e, &c).is_err());
        c.growth = Some(12.0);
        assert!(PreparedScan::new(Family::A, &e, &c).is_err());
        let (e, mut c) = ScanConfig::preset(Family::B);
        c.s = Some(0.2);
        assert!(PreparedScan::new(Family::B, &e, &c).is_err());
        let (e, mut c) = ScanConfig::preset(Family::D);
        c.truncations = vec![16.0, 8.0];
        assert!(PreparedScan::new(Family::D, &e, &c).is_err());
    }
}

