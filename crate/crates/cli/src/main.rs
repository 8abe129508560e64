use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use hbilinear::exponents::{characterize_with_slack, stein_weiss_with_slack, DEFAULT_SLACK};
use hbilinear::harness::{
    boundedness_experiment, tiling_audit, weak_type_endpoint_experiment, ExperimentConfig, ExperimentReport, Family,
    ScanConfig, TilingAuditConfig,
};
use hbilinear::{eval_b_lambda, eval_i_lambda, eval_s, ExponentConfig, GroupPoint, NormEstimatorConfig, Verdict, Weights};

#[derive(Parser)]
#[command(name = "hbilinear", version, about = "Bilinear fractional integrals on the Heisenberg group")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify an exponent configuration (exit 0 bounded, 2 unbounded, 3 inadmissible).
    CheckExponents {
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        gamma: f64,
        /// Use γ = −α − β and the two-weight conditions.
        #[arg(long)]
        stein_weiss: bool,
        #[arg(long, default_value_t = DEFAULT_SLACK)]
        slack: f64,
    },
    /// Evaluate an operator at one point.
    EvalOperator {
        #[arg(long, value_enum)]
        op: Op,
        /// Comma-separated coordinates `z₁,…,z₂ₙ,t`.
        #[arg(long, allow_hyphen_values = true)]
        at: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Norm ratio of the weighted operator with a dilation sweep.
    NormRatio {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Truncated ratios of a counterexample family.
    Divergence {
        #[arg(long)]
        family: Family,
        /// Exponents and family parameters; the family preset is used for missing sections.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        truncations: Option<Vec<f64>>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Weak-type profile at p = q = 1 and the shell-norm scaling.
    WeakEndpoint {
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Coverage, consistency and enlarged-overlap audit of the lattice tiling.
    TilingAudit {
        #[arg(long, default_value_t = 50.0)]
        half_width: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Op {
    #[value(name = "B")]
    B,
    #[value(name = "I")]
    I,
    #[value(name = "S")]
    S,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(ExperimentConfig::default()),
    }
}

fn reseed(cfg: &mut ExperimentConfig, seed: Option<u64>) {
    if let Some(s) = seed {
        cfg.quadrature.seed = s;
        cfg.norms.seed = s;
        if let Some(f) = cfg.family.as_mut() {
            f.seed = s;
        }
    }
}

/// CSV to `out` (plus sidecar) or to stdout; the summary goes to the other stream.
fn emit(report: &ExperimentReport, out: Option<&Path>) -> Result<()> {
    let summary = summary_text(report);
    match out {
        Some(path) => {
            let meta = report.write_files(path)?;
            print!("{summary}");
            println!("wrote {} and {}", path.display(), meta.display());
        }
        None => {
            let stdout = std::io::stdout();
            report.write_csv(stdout.lock())?;
            eprint!("{summary}");
        }
    }
    Ok(())
}

fn summary_text(report: &ExperimentReport) -> String {
    let mut s = String::new();
    if let Some(v) = &report.verdict {
        s.push_str(&format!("verdict: {v}\n"));
    }
    for (k, v) in &report.summary {
        s.push_str(&format!("{k} = {v}\n"));
    }
    for n in &report.notes {
        s.push_str(&format!("note: {n}\n"));
    }
    s
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::CheckExponents {
            n,
            lambda,
            p,
            q,
            alpha,
            beta,
            gamma,
            stein_weiss,
            slack,
        } => {
            let qd = (2 * n + 2) as f64;
            let cl = if stein_weiss {
                stein_weiss_with_slack(alpha, beta, lambda, p, q, qd, slack)
            } else {
                characterize_with_slack(&ExponentConfig::new(n, lambda, p, q, alpha, beta, gamma)?, slack)
            };
            let mut out = std::io::stdout().lock();
            writeln!(out, "verdict: {}", cl.verdict)?;
            writeln!(out, "witnesses: {}", cl.witness_names().join(", "))?;
            if !cl.boundary.is_empty() {
                let b: Vec<&str> = cl.boundary.iter().map(|c| c.name()).collect();
                writeln!(out, "boundary: {}", b.join(", "))?;
            }
            Ok(ExitCode::from(match cl.verdict {
                Verdict::Bounded => 0,
                Verdict::Unbounded => 2,
                Verdict::Inadmissible => 3,
            }))
        }
        Command::EvalOperator {
            op,
            at,
            config,
            seed,
            out,
        } => {
            let mut cfg = load(Some(&config))?;
            reseed(&mut cfg, seed);
            let exps = cfg.exponents()?;
            let coords = at
                .split(',')
                .map(|c| c.trim().parse::<f64>().with_context(|| format!("bad coordinate {c:?}")))
                .collect::<Result<Vec<_>>>()?;
            let x = GroupPoint::from_coords(&coords)?;
            if x.n() != exps.n {
                bail!("point has n = {}, config has n = {}", x.n(), exps.n);
            }
            let (f, g) = cfg.inputs_or_unit_balls(exps.n)?;
            let qc = &cfg.quadrature;
            let (name, est) = match op {
                Op::B => ("B", eval_b_lambda(&f, &g, &x, exps.lambda, qc)?),
                Op::I => ("I", eval_i_lambda(&f, &x, exps.lambda, qc)?),
                Op::S => {
                    let w = Weights {
                        alpha: exps.alpha,
                        beta: exps.beta,
                        gamma: exps.gamma,
                    };
                    ("S", eval_s(&f, &g, &x, w, exps.lambda, qc)?)
                }
            };
            let mut rep = ExperimentReport::new("eval-operator", &["shell", "value", "std_error", "samples"]);
            rep.echo("exponents", &exps)?;
            rep.echo("quadrature", qc)?;
            for (k, e) in &est.shells {
                rep.push_row(vec![(*k).into(), e.value.into(), e.std_error.into(), e.samples_used.into()]);
            }
            rep.set("operator", name);
            rep.set("at", at.as_str());
            rep.set_estimate("value", est.total);
            emit(&rep, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::NormRatio { config, seed, out } => {
            let mut cfg = load(Some(&config))?;
            reseed(&mut cfg, seed);
            let exps = cfg.exponents()?;
            let (f, g) = cfg.inputs_or_unit_balls(exps.n)?;
            let rep = boundedness_experiment(&f, &g, &exps, &cfg.quadrature, &cfg.norms)?;
            emit(&rep, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Divergence {
            family,
            config,
            truncations,
            seed,
            out,
        } => {
            let cfg = load(config.as_deref())?;
            let (preset_exps, preset_scan) = ScanConfig::preset(family);
            let exps = cfg.exponents.unwrap_or(preset_exps);
            let mut scan = cfg.family.clone().unwrap_or(preset_scan);
            if let Some(t) = truncations {
                scan.truncations = t;
            }
            if let Some(s) = seed {
                scan.seed = s;
            }
            let rep = hbilinear::divergence_scan(family, &exps, &scan)?;
            emit(&rep, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::WeakEndpoint {
            lambda,
            n,
            config,
            seed,
            out,
        } => {
            let mut cfg = load(config.as_deref())?;
            if config.is_none() {
                cfg.norms = NormEstimatorConfig {
                    j_min: -8,
                    j_max: 1,
                    samples_per_stratum: 1000,
                    threshold_count: 15,
                    ..NormEstimatorConfig::default()
                };
                cfg.quadrature.k_min = -1;
                cfg.quadrature.samples_per_shell = 1000;
            }
            reseed(&mut cfg, seed);
            let rep = weak_type_endpoint_experiment(lambda, n, &cfg.quadrature, &cfg.norms)?;
            emit(&rep, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::TilingAudit {
            half_width,
            samples,
            seed,
            n,
            out,
        } => {
            let rep = tiling_audit(&TilingAuditConfig {
                n,
                half_width,
                samples,
                seed,
            })?;
            emit(&rep, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
