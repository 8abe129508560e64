//! Shell-stratified Monte Carlo for the bilinear operator `B_λ`, the linear
//! fractional integral `𝓘_λ` and the weighted operator `S_{α,β,γ}`.
//!
//! Shell `k` is `{2^{-k-1} ≤ |y| < 2^{-k}}`. Points are drawn by rejection
//! from `δ_{2^{-k}}([−1,1]^{2n} × [−1,1])`; each shell owns a generator
//! stream keyed by `(seed, k)`, so results do not depend on thread count.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::functions::TestFunction;
use crate::group::{knorm_parts, GroupPoint, Horizontal};
use crate::sampling::stream_rng;

pub const MIN_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub k_min: i32,
    pub k_max: i32,
    pub samples_per_shell: usize,
    pub seed: u64,
    #[serde(default = "default_tolerance")]
    pub relative_tolerance: f64,
}

fn default_tolerance() -> f64 {
    0.05
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            k_min: -2,
            k_max: 14,
            samples_per_shell: 4000,
            seed: 0,
            relative_tolerance: default_tolerance(),
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_min > self.k_max {
            return Err(invalid("k_min", format!("{} > k_max = {}", self.k_min, self.k_max)));
        }
        if self.samples_per_shell < MIN_SAMPLES {
            return Err(invalid(
                "samples_per_shell",
                format!("{} < {MIN_SAMPLES}", self.samples_per_shell),
            ));
        }
        if !(self.relative_tolerance > 0.0) {
            return Err(invalid("relative_tolerance", "must be positive"));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn shells(&self) -> impl Iterator<Item = i32> {
        self.k_min..=self.k_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EstimateWithError {
    pub value: f64,
    pub std_error: f64,
    pub samples_used: u64,
}

impl EstimateWithError {
    pub const ZERO: Self = Self {
        value: 0.0,
        std_error: 0.0,
        samples_used: 0,
    };

    pub fn exact(value: f64) -> Self {
        Self {
            value,
            std_error: 0.0,
            samples_used: 0,
        }
    }

    /// Mean of `m` draws scaled by `scale`, from running sums.
    pub fn from_sums(sum: f64, sum_sq: f64, m: u64, scale: f64) -> Self {
        if m == 0 {
            return Self::ZERO;
        }
        let mf = m as f64;
        let mean = sum / mf;
        let var = if m > 1 {
            ((sum_sq - mf * mean * mean) / (mf - 1.0)).max(0.0)
        } else {
            0.0
        };
        Self {
            value: scale * mean,
            std_error: scale * (var / mf).sqrt(),
            samples_used: m,
        }
    }

    pub fn scale(self, c: f64) -> Self {
        Self {
            value: c * self.value,
            std_error: c.abs() * self.std_error,
            ..self
        }
    }

    pub fn relative_error(&self) -> f64 {
        if self.value == 0.0 {
            0.0
        } else {
            self.std_error / self.value.abs()
        }
    }

    /// Whether `other` is within `k` combined standard errors.
    pub fn agrees_with(&self, other: f64, k: f64) -> bool {
        (self.value - other).abs() <= k * self.std_error
    }
}

/// Sum of independent estimates.
impl std::ops::Add for EstimateWithError {
    type Output = Self;

    fn add(self, other: Self) -> Self {
        Self {
            value: self.value + other.value,
            std_error: self.std_error.hypot(other.std_error),
            samples_used: self.samples_used + other.samples_used,
        }
    }
}

impl std::iter::Sum for EstimateWithError {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, |a, b| a + b)
    }
}

/// Volume of `δ_ρ([−1,1]^{2n} × [−1,1])`.
pub fn box_volume(n: usize, rho: f64) -> f64 {
    2f64.powi(2 * n as i32 + 1) * rho.powi(2 * n as i32 + 2)
}

/// Rejection sampler for one dyadic shell. Each proposal either yields an
/// accepted point with weight `V_box / proposals` or is discarded.
pub struct ShellSampler {
    n: usize,
    rho: f64,
    proposals: usize,
    drawn: usize,
    weight: f64,
    rng: ChaCha8Rng,
}

impl ShellSampler {
    /// Sampler for `{2^{-k-1} ≤ |y| < 2^{-k}}` with `proposals` box draws.
    pub fn new(n: usize, k: i32, proposals: usize, seed: u64) -> Self {
        Self::with_rng(n, k, proposals, stream_rng(seed, k as i64 as u64))
    }

    pub fn with_rng(n: usize, k: i32, proposals: usize, rng: ChaCha8Rng) -> Self {
        let rho = 2f64.powi(-k);
        Self {
            n,
            rho,
            proposals,
            drawn: 0,
            weight: box_volume(n, rho) / proposals as f64,
            rng,
        }
    }

    /// Box volume of this shell's proposal region.
    pub fn box_volume(&self) -> f64 {
        box_volume(self.n, self.rho)
    }

    pub fn proposals(&self) -> usize {
        self.proposals
    }

    /// Next proposal: `Some(point)` when it falls in the shell.
    pub fn propose(&mut self) -> Option<Option<GroupPoint>> {
        if self.drawn == self.proposals {
            return None;
        }
        self.drawn += 1;
        let mut z: Horizontal = Horizontal::from_elem(0.0, 2 * self.n);
        for c in z.iter_mut() {
            *c = self.rng.gen_range(-1.0..1.0);
        }
        let t = self.rng.gen_range(-1.0..1.0);
        let k = knorm_parts(&z, t);
        if !(0.5..1.0).contains(&k) {
            return Some(None);
        }
        for c in z.iter_mut() {
            *c *= self.rho;
        }
        Some(Some(GroupPoint::from_parts(z, t * self.rho * self.rho)))
    }
}

impl Iterator for ShellSampler {
    type Item = (GroupPoint, f64);

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            match self.propose()? {
                Some(p) => return Some((p, self.weight)),
                None => continue,
            }
        }
    }
}

/// Points of shell `k` with their density weights.
pub fn shell_sampler(n: usize, k: i32, cfg: &QuadratureConfig) -> ShellSampler {
    ShellSampler::new(n, k, cfg.samples_per_shell, cfg.seed)
}

/// `∫_{shell k} h(y) dy` by the shell sampler.
pub fn shell_integral(
    n: usize,
    k: i32,
    proposals: usize,
    seed: u64,
    mut h: impl FnMut(&GroupPoint) -> Result<f64>,
) -> Result<EstimateWithError> {
    let mut s = ShellSampler::new(n, k, proposals, seed);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    while let Some(p) = s.propose() {
        if let Some(y) = p {
            let v = h(&y)?;
            sum += v;
            sum_sq += v * v;
        }
    }
    let vol = box_volume(n, s.rho);
    if sum == 0.0 {
        return Ok(EstimateWithError {
            value: 0.0,
            std_error: 0.0,
            samples_used: proposals as u64,
        });
    }
    Ok(EstimateWithError::from_sums(sum, sum_sq, proposals as u64, vol))
}

/// Monte Carlo `|B(0, radius)|` by rejection from the bounding box.
pub fn ball_volume_estimate_radius(n: usize, radius: f64, cfg: &QuadratureConfig) -> EstimateWithError {
    let mut rng = stream_rng(cfg.seed, 0xB0_11);
    let m = cfg.samples_per_shell;
    let mut z: Horizontal = Horizontal::from_elem(0.0, 2 * n);
    let mut hits = 0u64;
    for _ in 0..m {
        for c in z.iter_mut() {
            *c = rng.gen_range(-1.0..1.0);
        }
        let t = rng.gen_range(-1.0..1.0);
        if knorm_parts(&z, t) < 1.0 {
            hits += 1;
        }
    }
    EstimateWithError::from_sums(hits as f64, hits as f64, m as u64, box_volume(n, radius))
}

/// Monte Carlo estimate of `C_Q = |B(0,1)|`.
pub fn ball_volume_estimate(n: usize, cfg: &QuadratureConfig) -> EstimateWithError {
    ball_volume_estimate_radius(n, 1.0, cfg)
}

/// `B_k(f,g)(x) = ∫_{shell k} f(x·y⁻¹) g(x·y) dy`.
pub fn eval_shell_piece(
    f: &TestFunction,
    g: &TestFunction,
    x: &GroupPoint,
    k: i32,
    cfg: &QuadratureConfig,
) -> Result<EstimateWithError> {
    let n = x.n();
    shell_integral(n, k, cfg.samples_per_shell, cfg.seed, |y| {
        let fv = f.evaluate(&x.mul_unchecked(&y.inverse()))?;
        if fv == 0.0 {
            return Ok(0.0);
        }
        Ok(fv * g.evaluate(&x.mul_unchecked(y))?)
    })
}

/// Estimate of an operator value with its per-shell breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorEstimate {
    pub total: EstimateWithError,
    /// `(k, contribution)` in increasing `k`.
    pub shells: Vec<(i32, EstimateWithError)>,
}

impl OperatorEstimate {
    pub fn value(&self) -> f64 {
        self.total.value
    }

    /// Contributions of the two extreme shells, `(k_min, k_max)`.
    pub fn tail_magnitudes(&self) -> (f64, f64) {
        let first = self.shells.first().map_or(0.0, |s| s.1.value.abs());
        let last = self.shells.last().map_or(0.0, |s| s.1.value.abs());
        (first, last)
    }
}

fn check_lambda(lambda: f64, n: usize) -> Result<()> {
    let q = (2 * n + 2) as f64;
    if !(lambda > 0.0 && lambda < q) {
        return Err(Error::LambdaOutOfRange { lambda, q });
    }
    Ok(())
}

fn over_shells(
    n: usize,
    cfg: &QuadratureConfig,
    h: impl Fn(&GroupPoint) -> Result<f64> + Sync,
) -> Result<OperatorEstimate> {
    cfg.validate()?;
    let ks: Vec<i32> = cfg.shells().collect();
    let shells: Vec<(i32, EstimateWithError)> = ks
        .par_iter()
        .map(|&k| shell_integral(n, k, cfg.samples_per_shell, cfg.seed, &h).map(|e| (k, e)))
        .collect::<Result<_>>()?;
    let total = shells.iter().map(|s| s.1).sum();
    Ok(OperatorEstimate { total, shells })
}

/// `B_λ(f,g)(x) = ∫ f(x·y⁻¹) g(x·y) |y|^{λ−Q} dy`, truncated to the configured shells.
pub fn eval_b_lambda(
    f: &TestFunction,
    g: &TestFunction,
    x: &GroupPoint,
    lambda: f64,
    cfg: &QuadratureConfig,
) -> Result<OperatorEstimate> {
    let n = x.n();
    check_lambda(lambda, n)?;
    let e = lambda - (2 * n + 2) as f64;
    over_shells(n, cfg, |y| {
        let fv = f.evaluate(&x.mul_unchecked(&y.inverse()))?;
        if fv == 0.0 {
            return Ok(0.0);
        }
        let gv = g.evaluate(&x.mul_unchecked(y))?;
        if gv == 0.0 {
            return Ok(0.0);
        }
        Ok(fv * gv * y.knorm().powf(e))
    })
}

/// `𝓘_λ f(x) = ∫ f(x·y⁻¹) |y|^{λ−Q} dy`.
pub fn eval_i_lambda(f: &TestFunction, x: &GroupPoint, lambda: f64, cfg: &QuadratureConfig) -> Result<OperatorEstimate> {
    let n = x.n();
    check_lambda(lambda, n)?;
    let e = lambda - (2 * n + 2) as f64;
    over_shells(n, cfg, |y| {
        let fv = f.evaluate(&x.mul_unchecked(&y.inverse()))?;
        if fv == 0.0 {
            return Ok(0.0);
        }
        Ok(fv * y.knorm().powf(e))
    })
}

/// Power weights of `S_{α,β,γ}`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Weights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// `S(f,g)(x) = |x|^{-γ} ∫ f(xy⁻¹)|xy⁻¹|^{-α} g(xy)|xy|^{-β} |y|^{λ−Q} dy`.
pub fn eval_s(
    f: &TestFunction,
    g: &TestFunction,
    x: &GroupPoint,
    w: Weights,
    lambda: f64,
    cfg: &QuadratureConfig,
) -> Result<OperatorEstimate> {
    let n = x.n();
    check_lambda(lambda, n)?;
    let xn = x.knorm();
    if xn == 0.0 {
        return Err(Error::SingularPoint);
    }
    let e = lambda - (2 * n + 2) as f64;
    let outer = xn.powf(-w.gamma);
    let est = over_shells(n, cfg, |y| {
        let u = x.mul_unchecked(&y.inverse());
        let fv = f.evaluate(&u)?;
        if fv == 0.0 {
            return Ok(0.0);
        }
        let v = x.mul_unchecked(y);
        let gv = g.evaluate(&v)?;
        if gv == 0.0 {
            return Ok(0.0);
        }
        Ok(fv * u.knorm().powf(-w.alpha) * gv * v.knorm().powf(-w.beta) * y.knorm().powf(e))
    })?;
    Ok(OperatorEstimate {
        total: est.total.scale(outer),
        shells: est.shells.into_iter().map(|(k, s)| (k, s.scale(outer))).collect(),
    })
}
