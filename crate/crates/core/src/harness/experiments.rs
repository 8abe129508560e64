//! Norm-ratio, weak-type endpoint and tiling experiments.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{characterize, ExponentConfig, Verdict};
use crate::functions::TestFunction;
use crate::group::{GroupPoint, Horizontal};
use crate::harness::norms::{lp_norm, sample_strata, weak_from_samples, NormEstimatorConfig};
use crate::harness::report::ExperimentReport;
use crate::lattice::{
    cube_contains, default_radius, enlarged_superset_contains, locate, overlap_count, sample_enlarged_cube, CubeKind,
};
use crate::quadrature::{eval_b_lambda, eval_s, eval_shell_piece, EstimateWithError, QuadratureConfig, Weights};
use crate::sampling::stream_rng;

/// Dilation factors of the ratio stability sweep.
pub const SCALE_SWEEP: [f64; 3] = [0.25, 1.0, 4.0];

/// Ratio `a / (b c)` with first-order error propagation.
pub fn ratio_estimate(num: EstimateWithError, a: EstimateWithError, b: EstimateWithError) -> EstimateWithError {
    let den = a.value * b.value;
    if den == 0.0 {
        return EstimateWithError::exact(f64::NAN);
    }
    let value = num.value / den;
    let rel = num
        .relative_error()
        .hypot(a.relative_error())
        .hypot(b.relative_error());
    EstimateWithError {
        value,
        std_error: value.abs() * rel,
        samples_used: num.samples_used + a.samples_used + b.samples_used,
    }
}

/// `‖f‖_p`, exact when a closed form is known.
pub fn input_norm(f: &TestFunction, n: usize, p: f64, ncfg: &NormEstimatorConfig) -> Result<EstimateWithError> {
    match f.norm_pow_closed_form(p, n) {
        Some(v) => Ok(EstimateWithError::exact(v.powf(1.0 / p))),
        None => Ok(lp_norm(n, p, ncfg, f)?.norm),
    }
}

/// One scale of the ratio sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioAtScale {
    pub scale: f64,
    pub output_norm: EstimateWithError,
    pub f_norm: EstimateWithError,
    pub g_norm: EstimateWithError,
    pub ratio: EstimateWithError,
    pub tail_fraction: f64,
}

/// `‖S(f∘δ_s, g∘δ_s)‖_r / (‖f∘δ_s‖_p ‖g∘δ_s‖_q)`; the shell and stratum
/// ranges follow the dilation so that the same relative window is covered.
pub fn ratio_at_scale(
    f: &TestFunction,
    g: &TestFunction,
    exps: &ExponentConfig,
    scale: f64,
    qcfg: &QuadratureConfig,
    ncfg: &NormEstimatorConfig,
) -> Result<RatioAtScale> {
    let n = exps.n;
    let r = exps.derived_r()?.r;
    let shift = scale.log2().round() as i32;
    let (fs, gs) = if scale == 1.0 {
        (f.clone(), g.clone())
    } else {
        (f.clone().dilated(scale), g.clone().dilated(scale))
    };
    let q = QuadratureConfig {
        k_min: qcfg.k_min + shift,
        k_max: qcfg.k_max + shift,
        ..*qcfg
    };
    let nc = ncfg.shifted(-shift);
    let w = Weights {
        alpha: exps.alpha,
        beta: exps.beta,
        gamma: exps.gamma,
    };
    let out = |x: &GroupPoint, seed: u64| -> Result<f64> {
        Ok(eval_s(&fs, &gs, x, w, exps.lambda, &q.with_seed(seed))?.total.value)
    };
    let est = lp_norm(n, r, &nc, &out)?;
    let f_norm = input_norm(&fs, n, exps.p, &nc)?;
    let g_norm = input_norm(&gs, n, exps.q, &nc)?;
    Ok(RatioAtScale {
        scale,
        output_norm: est.norm,
        f_norm,
        g_norm,
        ratio: ratio_estimate(est.norm, f_norm, g_norm),
        tail_fraction: est.tail_fraction(),
    })
}

/// Weighted norm ratio for an admissible configuration, with the dilation sweep.
pub fn boundedness_experiment(
    f: &TestFunction,
    g: &TestFunction,
    exps: &ExponentConfig,
    qcfg: &QuadratureConfig,
    ncfg: &NormEstimatorConfig,
) -> Result<ExperimentReport> {
    exps.validate()?;
    f.validate(exps.n)?;
    g.validate(exps.n)?;
    let cls = characterize(exps);
    if cls.verdict == Verdict::Inadmissible {
        return Err(Error::Inadmissible(cls.witness_names().join(",")));
    }
    let mut rep = ExperimentReport::new(
        "norm-ratio",
        &[
            "scale",
            "output_norm",
            "output_norm_se",
            "f_norm",
            "f_norm_se",
            "g_norm",
            "g_norm_se",
            "ratio",
            "ratio_se",
            "tail_fraction",
        ],
    );
    rep.echo("exponents", exps)?;
    rep.echo("quadrature", qcfg)?;
    rep.echo("norms", ncfg)?;
    rep.echo("f", f)?;
    rep.echo("g", g)?;
    rep.set("characterization", cls.verdict.to_string());
    rep.set("r", exps.derived_r()?.r);

    let rows: Vec<RatioAtScale> = SCALE_SWEEP
        .iter()
        .map(|&s| ratio_at_scale(f, g, exps, s, qcfg, ncfg))
        .collect::<Result<_>>()?;
    for x in &rows {
        rep.push_row(vec![
            x.scale.into(),
            x.output_norm.value.into(),
            x.output_norm.std_error.into(),
            x.f_norm.value.into(),
            x.f_norm.std_error.into(),
            x.g_norm.value.into(),
            x.g_norm.std_error.into(),
            x.ratio.value.into(),
            x.ratio.std_error.into(),
            x.tail_fraction.into(),
        ]);
    }
    let base = rows[1];
    if base.f_norm.value == 0.0 || base.g_norm.value == 0.0 {
        rep.verdict = Some("degenerate".into());
        rep.notes.push("an input has zero norm; the ratio is 0/0".into());
        rep.set("ratio", f64::NAN);
        return Ok(rep);
    }
    rep.set_estimate("ratio", base.ratio);
    let stable = rows.iter().all(|x| {
        let se = x.ratio.std_error.hypot(base.ratio.std_error);
        (x.ratio.value - base.ratio.value).abs() <= 3.0 * se
    });
    rep.set("dilation_stable", stable);
    rep.verdict = Some(if base.ratio.value.is_finite() { "finite" } else { "infinite" }.into());
    Ok(rep)
}

/// Normalised shell norm `2^{Qk/2} ∫ B_k(f,g)^{1/2}` for one `k`.
pub fn normalized_shell_norm(
    f: &TestFunction,
    g: &TestFunction,
    n: usize,
    k: i32,
    qcfg: &QuadratureConfig,
    ncfg: &NormEstimatorConfig,
) -> Result<EstimateWithError> {
    let piece = |x: &GroupPoint, seed: u64| -> Result<f64> {
        Ok(eval_shell_piece(f, g, x, k, &qcfg.with_seed(seed))?.value)
    };
    let est = lp_norm(n, 0.5, ncfg, &piece)?;
    let qd = (2 * n + 2) as f64;
    Ok(est.integral.scale(2f64.powf(qd * k as f64 / 2.0)))
}

/// Shell indices of the shell-norm flatness check.
pub const FLATNESS_SHELLS: std::ops::RangeInclusive<i32> = 0..=6;

/// Weak-type profile of `B_λ(χ_B, χ_B)` at `p = q = 1`, `1/r = 2 − λ/Q`,
/// plus the flatness of the normalised shell norms.
///
/// The threshold grid is `t_top · 2^{-i}`, `i < threshold_count`, anchored at
/// 0.9 times the largest sampled value of the output.
pub fn weak_type_endpoint_experiment(
    lambda: f64,
    n: usize,
    qcfg: &QuadratureConfig,
    ncfg: &NormEstimatorConfig,
) -> Result<ExperimentReport> {
    let qd = (2 * n + 2) as f64;
    if !(lambda > 0.0 && lambda < qd) {
        return Err(Error::LambdaOutOfRange { lambda, q: qd });
    }
    let inv_r = 2.0 - lambda / qd;
    let r = 1.0 / inv_r;
    let ball = TestFunction::unit_ball(n);
    let out = |x: &GroupPoint, seed: u64| -> Result<f64> {
        Ok(eval_b_lambda(&ball, &ball, x, lambda, &qcfg.with_seed(seed))?.total.value)
    };
    let samples = sample_strata(n, ncfg, &out)?;
    let top = samples.iter().flat_map(|s| s.values.iter().copied()).fold(0.0, f64::max);
    let t_top = 0.9 * top;
    let grid: Vec<f64> = (0..ncfg.threshold_count)
        .rev()
        .map(|i| t_top * 2f64.powi(-(i as i32)))
        .collect();
    let weak = weak_from_samples(&samples, r, &grid);

    let mut rep = ExperimentReport::new(
        "weak-endpoint",
        &["section", "index", "threshold", "measure", "measure_se", "value", "value_se"],
    );
    rep.echo("quadrature", qcfg)?;
    rep.echo("norms", ncfg)?;
    rep.set("lambda", lambda);
    rep.set("n", n);
    rep.set("inv_r", inv_r);
    rep.set("r", r);
    for (i, pt) in weak.profile.iter().enumerate() {
        rep.push_row(vec![
            "weak-profile".into(),
            i.into(),
            pt.threshold.into(),
            pt.measure.value.into(),
            pt.measure.std_error.into(),
            pt.profile.value.into(),
            pt.profile.std_error.into(),
        ]);
    }
    let decades = if grid.len() > 1 {
        (grid[grid.len() - 1] / grid[0]).log10()
    } else {
        0.0
    };
    let spread = weak.spread();
    rep.set_estimate("weak_norm", weak.norm);
    rep.set("grid_decades", decades);
    rep.set("weak_profile_spread", spread);
    rep.set("weak_profile_flat", spread < 10.0);

    let mut shell_norms = Vec::new();
    for k in FLATNESS_SHELLS {
        let e = normalized_shell_norm(&ball, &ball, n, k, qcfg, ncfg)?;
        rep.push_row(vec![
            "shell-norm".into(),
            k.into(),
            f64::NAN.into(),
            f64::NAN.into(),
            f64::NAN.into(),
            e.value.into(),
            e.std_error.into(),
        ]);
        shell_norms.push(e.value);
    }
    let lmax = shell_norms.iter().cloned().fold(0.0, f64::max);
    let lmin = shell_norms.iter().cloned().fold(f64::INFINITY, f64::min);
    let flatness = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
    rep.set("shell_norm_flatness", flatness);
    rep.set("shell_norm_flat", flatness < 4.0);
    rep.verdict = Some(format!(
        "weak-profile {}; shell-norms {}",
        if spread < 10.0 { "flat" } else { "not-flat" },
        if flatness < 4.0 { "flat" } else { "not-flat" }
    ));
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TilingAuditConfig {
    #[serde(default = "one")]
    pub n: usize,
    pub half_width: f64,
    pub samples: usize,
    pub seed: u64,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TilingAudit {
    pub coverage_failures: u64,
    pub consistency_failures: u64,
    pub containment_failures: u64,
    pub max_overlap: u64,
    pub min_overlap: u64,
    /// `(overlap count, number of points)` in increasing count.
    pub histogram: Vec<(u64, u64)>,
}

/// Runs the tiling invariants on uniform points of `[−W, W]^{2n+1}`.
pub fn run_tiling_audit(cfg: &TilingAuditConfig) -> Result<TilingAudit> {
    if !(cfg.half_width > 0.0) || cfg.samples == 0 || cfg.n == 0 {
        return Err(crate::error::invalid("half_width", "inputs must be positive"));
    }
    let n = cfg.n;
    let w = cfg.half_width;
    let radius = default_radius(n);
    let mut rng = stream_rng(cfg.seed, 0x7117);
    let pts: Vec<GroupPoint> = (0..cfg.samples)
        .map(|_| {
            let z: Horizontal = (0..2 * n).map(|_| rng.gen_range(-w..w)).collect();
            GroupPoint::new(z, rng.gen_range(-w..w)).expect("finite")
        })
        .collect();
    let per: Vec<(bool, bool, u64)> = pts
        .par_iter()
        .map(|x| {
            let a = locate(x);
            let consistent = cube_contains(&a, x).unwrap_or(false);
            let covered = overlap_count(x, 1, CubeKind::Plain) == 1;
            (consistent, covered, overlap_count(x, radius, CubeKind::Enlarged))
        })
        .collect();
    let mut hist = std::collections::BTreeMap::new();
    let (mut cov, mut cons) = (0, 0);
    for &(c, v, k) in &per {
        cons += u64::from(!c);
        cov += u64::from(!v);
        *hist.entry(k).or_insert(0u64) += 1;
    }
    // enlarged containment on a subsample
    let containment_failures = pts
        .iter()
        .step_by(10)
        .enumerate()
        .map(|(i, x)| {
            let mut r = stream_rng(cfg.seed ^ 0xE1, i as u64);
            let a = locate(x);
            let y = sample_enlarged_cube(&a, &mut r);
            u64::from(!enlarged_superset_contains(&a, &y).unwrap_or(false))
        })
        .sum();
    Ok(TilingAudit {
        coverage_failures: cov,
        consistency_failures: cons,
        containment_failures,
        max_overlap: hist.keys().next_back().copied().unwrap_or(0),
        min_overlap: hist.keys().next().copied().unwrap_or(0),
        histogram: hist.into_iter().collect(),
    })
}

pub fn tiling_audit(cfg: &TilingAuditConfig) -> Result<ExperimentReport> {
    let audit = run_tiling_audit(cfg)?;
    let mut rep = ExperimentReport::new("tiling-audit", &["overlap_count", "points"]);
    rep.echo("tiling", cfg)?;
    for &(k, c) in &audit.histogram {
        rep.push_row(vec![k.into(), c.into()]);
    }
    rep.set("coverage_failures", audit.coverage_failures);
    rep.set("consistency_failures", audit.consistency_failures);
    rep.set("containment_failures", audit.containment_failures);
    rep.set("max_overlap", audit.max_overlap);
    rep.set("min_overlap", audit.min_overlap);
    let ok = audit.coverage_failures == 0 && audit.consistency_failures == 0 && audit.containment_failures == 0;
    rep.verdict = Some(if ok { "pass" } else { "fail" }.into());
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiling_audit_small() {
        let a = run_tiling_audit(&TilingAuditConfig {
            n: 1,
            half_width: 50.0,
            samples: 5000,
            seed: 1,
        })
        .unwrap();
        assert_eq!(a.coverage_failures, 0);
        assert_eq!(a.consistency_failures, 0);
        assert_eq!(a.containment_failures, 0);
        assert_eq!(a.max_overlap, 2048);
    }

    #[test]
    fn degenerate_ratio_is_flagged() {
        let exps = ExponentConfig::unweighted(1, 1.0, 2.0, 2.0).unwrap();
        let q = QuadratureConfig {
            k_min: -1,
            k_max: 4,
            samples_per_shell: 1000,
            seed: 0,
            relative_tolerance: 0.1,
        };
        let nc = NormEstimatorConfig {
            j_min: -2,
            j_max: 1,
            samples_per_stratum: 50,
            ..Default::default()
        };
        let rep = boundedness_experiment(&TestFunction::zero(), &TestFunction::unit_ball(1), &exps, &q, &nc).unwrap();
        assert_eq!(rep.verdict.as_deref(), Some("degenerate"));
    }

    #[test]
    fn inadmissible_rejected() {
        let exps = ExponentConfig::new(1, 1.0, 2.0, 2.0, 2.5, 0.0, 0.0).unwrap();
        let b = TestFunction::unit_ball(1);
        let r = boundedness_experiment(&b, &b, &exps, &QuadratureConfig::default(), &NormEstimatorConfig::default());
        assert!(matches!(r, Err(Error::Inadmissible(_))));
    }

    #[test]
    fn ratio_propagates_errors() {
        let e = ratio_estimate(
            EstimateWithError {
                value: 2.0,
                std_error: 0.2,
                samples_used: 1,
            },
            EstimateWithError::exact(1.0),
            EstimateWithError::exact(4.0),
        );
        assert!((e.value - 0.5).abs() < 1e-15);
        assert!((e.std_error - 0.05).abs() < 1e-15);
    }
}
