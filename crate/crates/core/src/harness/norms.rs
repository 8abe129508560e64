//! Stratified Monte Carlo for `L^p` and weak `L^{r,∞}` norms.
//!
//! Stratum `j` is the Koranyi shell `2^j ≤ |x| < 2^{j+1}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::functions::TestFunction;
use crate::group::GroupPoint;
use crate::quadrature::{EstimateWithError, ShellSampler};
use crate::sampling::{mix, stream_rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormEstimatorConfig {
    pub j_min: i32,
    pub j_max: i32,
    pub samples_per_stratum: usize,
    pub seed: u64,
    /// First threshold `t₀` of the weak-norm grid `t₀·2^i`.
    #[serde(default = "default_t0")]
    pub threshold_start: f64,
    #[serde(default = "default_tcount")]
    pub threshold_count: usize,
}

fn default_t0() -> f64 {
    1e-3
}

fn default_tcount() -> usize {
    24
}

impl Default for NormEstimatorConfig {
    fn default() -> Self {
        Self {
            j_min: -12,
            j_max: 12,
            samples_per_stratum: 4000,
            seed: 0,
            threshold_start: default_t0(),
            threshold_count: default_tcount(),
        }
    }
}

impl NormEstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.j_min > self.j_max {
            return Err(invalid("j_min", format!("{} > j_max = {}", self.j_min, self.j_max)));
        }
        if self.samples_per_stratum == 0 {
            return Err(invalid("samples_per_stratum", "must be positive"));
        }
        if !(self.threshold_start > 0.0) || !self.threshold_start.is_finite() {
            return Err(invalid("threshold_start", "must be positive"));
        }
        if self.threshold_count == 0 {
            return Err(invalid("threshold_count", "must be positive"));
        }
        Ok(())
    }

    pub fn thresholds(&self) -> Vec<f64> {
        (0..self.threshold_count)
            .map(|i| self.threshold_start * 2f64.powi(i as i32))
            .collect()
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    /// Strata moved by `shift` (used when inputs are dilated).
    pub fn shifted(self, shift: i32) -> Self {
        Self {
            j_min: self.j_min + shift,
            j_max: self.j_max + shift,
            ..self
        }
    }
}

/// Something that can be evaluated at sampled points. The `seed` is unique
/// per sample point, for integrands that are themselves Monte Carlo estimates.
pub trait Sampled: Sync {
    fn value_at(&self, x: &GroupPoint, seed: u64) -> Result<f64>;
}

impl Sampled for TestFunction {
    fn value_at(&self, x: &GroupPoint, _seed: u64) -> Result<f64> {
        self.evaluate(x)
    }
}

impl<F> Sampled for F
where
    F: Fn(&GroupPoint, u64) -> Result<f64> + Sync,
{
    fn value_at(&self, x: &GroupPoint, seed: u64) -> Result<f64> {
        self(x, seed)
    }
}

/// Values of `F` at the accepted points of one stratum.
#[derive(Debug, Clone)]
pub struct StratumSamples {
    pub j: i32,
    pub box_volume: f64,
    pub proposals: usize,
    pub values: Vec<f64>,
}

impl StratumSamples {
    /// `∫_{stratum} h(F(x)) dx`.
    pub fn integral(&self, h: impl Fn(f64) -> f64) -> EstimateWithError {
        let (mut s, mut s2) = (0.0, 0.0);
        for &v in &self.values {
            let w = h(v);
            s += w;
            s2 += w * w;
        }
        if s == 0.0 {
            return EstimateWithError {
                samples_used: self.proposals as u64,
                ..EstimateWithError::ZERO
            };
        }
        EstimateWithError::from_sums(s, s2, self.proposals as u64, self.box_volume)
    }
}

/// Draws every stratum and evaluates `F` at the accepted points.
pub fn sample_strata<F: Sampled + ?Sized>(n: usize, cfg: &NormEstimatorConfig, f: &F) -> Result<Vec<StratumSamples>> {
    cfg.validate()?;
    let js: Vec<i32> = (cfg.j_min..=cfg.j_max).collect();
    js.par_iter()
        .map(|&j| {
            let stream = stream_rng(cfg.seed ^ 0x6E6F_726D, j as i64 as u64);
            let mut sampler = ShellSampler::with_rng(n, -j - 1, cfg.samples_per_stratum, stream);
            let box_volume = sampler.box_volume();
            let mut pts = Vec::new();
            while let Some(p) = sampler.propose() {
                if let Some(x) = p {
                    pts.push(x);
                }
            }
            let values = pts
                .par_iter()
                .enumerate()
                .map(|(i, x)| {
                    let seed = mix(cfg.seed ^ mix((j as i64 as u64) << 32 ^ i as u64));
                    f.value_at(x, seed).map(f64::abs)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(StratumSamples {
                j,
                box_volume,
                proposals: cfg.samples_per_stratum,
                values,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    /// `(∫|F|^p)^{1/p}`.
    pub norm: EstimateWithError,
    /// `∫|F|^p`.
    pub integral: EstimateWithError,
    /// Per-stratum contributions to `∫|F|^p`.
    pub strata: Vec<(i32, EstimateWithError)>,
}

impl NormEstimate {
    /// Share of the integral carried by the two outermost strata.
    pub fn tail_fraction(&self) -> f64 {
        let total = self.integral.value;
        if total == 0.0 {
            return 0.0;
        }
        let first = self.strata.first().map_or(0.0, |s| s.1.value);
        let last = self.strata.last().map_or(0.0, |s| s.1.value);
        (first + last) / total
    }
}

/// `(∫ x^p)^{1/p}` with the delta-method error.
pub fn root_estimate(integral: EstimateWithError, p: f64) -> EstimateWithError {
    let v = integral.value.max(0.0);
    let value = v.powf(1.0 / p);
    let std_error = if v > 0.0 {
        value / p * integral.std_error / v
    } else {
        0.0
    };
    EstimateWithError {
        value,
        std_error,
        samples_used: integral.samples_used,
    }
}

pub fn norm_from_samples(samples: &[StratumSamples], p: f64) -> NormEstimate {
    let strata: Vec<(i32, EstimateWithError)> = samples.iter().map(|s| (s.j, s.integral(|v| v.powf(p)))).collect();
    let integral: EstimateWithError = strata.iter().map(|s| s.1).sum();
    NormEstimate {
        norm: root_estimate(integral, p),
        integral,
        strata,
    }
}

/// Stratified estimate of `‖F‖_p`.
pub fn lp_norm<F: Sampled + ?Sized>(n: usize, p: f64, cfg: &NormEstimatorConfig, f: &F) -> Result<NormEstimate> {
    if !(p > 0.0) {
        return Err(invalid("p", "must be positive"));
    }
    Ok(norm_from_samples(&sample_strata(n, cfg, f)?, p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakProfilePoint {
    pub threshold: f64,
    /// `|{|F| > t}|`.
    pub measure: EstimateWithError,
    /// `t · |{|F| > t}|^{1/r}`.
    pub profile: EstimateWithError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakNormEstimate {
    pub norm: EstimateWithError,
    pub argmax_threshold: f64,
    pub profile: Vec<WeakProfilePoint>,
}

impl WeakNormEstimate {
    /// Max over min of the nonzero profile values, `∞` if some are zero.
    pub fn spread(&self) -> f64 {
        let vals: Vec<f64> = self.profile.iter().map(|p| p.profile.value).collect();
        let max = vals.iter().cloned().fold(0.0, f64::max);
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        if min > 0.0 {
            max / min
        } else {
            f64::INFINITY
        }
    }
}

pub fn weak_from_samples(samples: &[StratumSamples], r: f64, thresholds: &[f64]) -> WeakNormEstimate {
    let profile: Vec<WeakProfilePoint> = thresholds
        .iter()
        .map(|&t| {
            let measure: EstimateWithError = samples.iter().map(|s| s.integral(|v| if v > t { 1.0 } else { 0.0 })).sum();
            let profile = root_estimate(measure, r).scale(t);
            WeakProfilePoint {
                threshold: t,
                measure,
                profile,
            }
        })
        .collect();
    let best = profile
        .iter()
        .max_by(|a, b| a.profile.value.total_cmp(&b.profile.value))
        .cloned();
    let (norm, argmax_threshold) = best.map_or((EstimateWithError::ZERO, f64::NAN), |b| (b.profile, b.threshold));
    WeakNormEstimate {
        norm,
        argmax_threshold,
        profile,
    }
}

/// `sup_t t·|{|F| > t}|^{1/r}` over the configured threshold grid.
pub fn weak_lr_norm<F: Sampled + ?Sized>(n: usize, r: f64, cfg: &NormEstimatorConfig, f: &F) -> Result<WeakNormEstimate> {
    if !(r > 0.0) {
        return Err(invalid("r", "must be positive"));
    }
    let samples = sample_strata(n, cfg, f)?;
    Ok(weak_from_samples(&samples, r, &cfg.thresholds()))
}
