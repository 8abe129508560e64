//! Exponent arithmetic: the homogeneity relation, admissibility and the
//! characterization of power-weighted boundedness.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Absolute slack used when comparing exponents.
pub const DEFAULT_SLACK: f64 = 1e-12;

/// `1/r` below this is reported as near-degenerate.
pub const NEAR_DEGENERATE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentConfig {
    pub n: usize,
    pub lambda: f64,
    pub p: f64,
    pub q: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub gamma: f64,
}

impl ExponentConfig {
    pub fn new(n: usize, lambda: f64, p: f64, q: f64, alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let cfg = Self {
            n,
            lambda,
            p,
            q,
            alpha,
            beta,
            gamma,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn unweighted(n: usize, lambda: f64, p: f64, q: f64) -> Result<Self> {
        Self::new(n, lambda, p, q, 0.0, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n", "must be positive"));
        }
        let qd = self.q_dim();
        if ![self.lambda, self.p, self.q, self.alpha, self.beta, self.gamma]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::NonFinite);
        }
        if !(self.lambda > 0.0 && self.lambda < qd) {
            return Err(Error::LambdaOutOfRange {
                lambda: self.lambda,
                q: qd,
            });
        }
        for (name, v) in [("p", self.p), ("q", self.q)] {
            if !(v > 1.0) {
                return Err(invalid(name, format!("{v} must lie in (1, inf)")));
            }
        }
        Ok(())
    }

    pub fn q_dim(&self) -> f64 {
        (2 * self.n + 2) as f64
    }

    /// `1/p + 1/q − (λ − α − β − γ)/Q`, without sign checks.
    pub fn inv_r(&self) -> f64 {
        1.0 / self.p + 1.0 / self.q - (self.lambda - self.alpha - self.beta - self.gamma) / self.q_dim()
    }

    pub fn derived_r(&self) -> Result<DerivedR> {
        derived_r(self.p, self.q, self.lambda, self.alpha, self.beta, self.gamma, self.q_dim())
    }

    /// Exchanges `(α, p)` with `(β, q)`.
    pub fn swapped(&self) -> Self {
        Self {
            p: self.q,
            q: self.p,
            alpha: self.beta,
            beta: self.alpha,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedR {
    pub inv_r: f64,
    pub r: f64,
    pub near_degenerate: bool,
}

/// Solves `1/r = 1/p + 1/q − (λ − α − β − γ)/Q`.
pub fn derived_r(p: f64, q: f64, lambda: f64, alpha: f64, beta: f64, gamma: f64, q_dim: f64) -> Result<DerivedR> {
    let inv_r = 1.0 / p + 1.0 / q - (lambda - alpha - beta - gamma) / q_dim;
    if !(inv_r > 0.0) {
        return Err(Error::NonPositiveInverseR { inv_r });
    }
    Ok(DerivedR {
        inv_r,
        r: 1.0 / inv_r,
        near_degenerate: inv_r < NEAR_DEGENERATE,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Condition {
    #[serde(rename = "I")]
    I,
    #[serde(rename = "II")]
    II,
    #[serde(rename = "III")]
    III,
    #[serde(rename = "IV")]
    IV,
    #[serde(rename = "homogeneity-positivity")]
    HomogeneityPositivity,
    #[serde(rename = "r-vs-pq")]
    RVsPq,
    #[serde(rename = "α-bound")]
    AlphaBound,
    #[serde(rename = "β-bound")]
    BetaBound,
    #[serde(rename = "γ-bound")]
    GammaBound,
}

impl Condition {
    pub fn name(self) -> &'static str {
        match self {
            Condition::I => "I",
            Condition::II => "II",
            Condition::III => "III",
            Condition::IV => "IV",
            Condition::HomogeneityPositivity => "homogeneity-positivity",
            Condition::RVsPq => "r-vs-pq",
            Condition::AlphaBound => "α-bound",
            Condition::BetaBound => "β-bound",
            Condition::GammaBound => "γ-bound",
        }
    }

    /// The counterpart under `(α,p) ↔ (β,q)`.
    pub fn mirrored(self) -> Self {
        match self {
            Condition::I => Condition::II,
            Condition::II => Condition::I,
            Condition::AlphaBound => Condition::BetaBound,
            Condition::BetaBound => Condition::AlphaBound,
            c => c,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Bounded,
    Unbounded,
    Inadmissible,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Bounded => "Bounded",
            Verdict::Unbounded => "Unbounded",
            Verdict::Inadmissible => "Inadmissible",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Verdict,
    /// Violated conditions, in canonical order.
    pub witnesses: Vec<Condition>,
    /// Non-strict conditions that hold with equality (within the slack).
    pub boundary: Vec<Condition>,
}

impl Classification {
    pub fn witness_names(&self) -> Vec<&'static str> {
        self.witnesses.iter().map(|c| c.name()).collect()
    }
}

/// Evaluates `lhs < rhs`, counting values within `slack` of the edge as violations.
fn strict(lhs: f64, rhs: f64, slack: f64) -> bool {
    lhs < rhs - slack
}

/// Evaluates `lhs ≤ rhs`, accepting values within `slack` of the edge.
fn weak(lhs: f64, rhs: f64, slack: f64) -> bool {
    lhs <= rhs + slack
}

/// Admissibility: `α < Q/p′`, `β < Q/q′`, `γ < Q/r`, `1/r > 0`, `1/r ≤ 1/p + 1/q`.
pub fn admissible(cfg: &ExponentConfig) -> (bool, Vec<Condition>) {
    admissible_with_slack(cfg, DEFAULT_SLACK)
}

pub fn admissible_with_slack(cfg: &ExponentConfig, slack: f64) -> (bool, Vec<Condition>) {
    let qd = cfg.q_dim();
    let inv_r = cfg.inv_r();
    let mut w = Vec::new();
    if !strict(cfg.alpha, qd * (1.0 - 1.0 / cfg.p), slack) {
        w.push(Condition::AlphaBound);
    }
    if !strict(cfg.beta, qd * (1.0 - 1.0 / cfg.q), slack) {
        w.push(Condition::BetaBound);
    }
    if !strict(cfg.gamma, qd * inv_r, slack) {
        w.push(Condition::GammaBound);
    }
    if !strict(0.0, inv_r, slack) {
        w.push(Condition::HomogeneityPositivity);
    }
    if !weak(inv_r, 1.0 / cfg.p + 1.0 / cfg.q, slack) {
        w.push(Condition::RVsPq);
    }
    (w.is_empty(), w)
}

pub fn characterize(cfg: &ExponentConfig) -> Classification {
    characterize_with_slack(cfg, DEFAULT_SLACK)
}

/// Inadmissible if [`admissible`] fails; otherwise Bounded iff
/// (I) `−Q+λ ≤ β+γ`, (II) `−Q+λ ≤ γ+α`, (III) `−Q+λ ≤ α+β`, (IV) `α+β+γ ≥ 0`.
pub fn characterize_with_slack(cfg: &ExponentConfig, slack: f64) -> Classification {
    let (ok, adm_w) = admissible_with_slack(cfg, slack);
    let floor = -cfg.q_dim() + cfg.lambda;
    let checks = [
        (Condition::I, floor, cfg.beta + cfg.gamma),
        (Condition::II, floor, cfg.gamma + cfg.alpha),
        (Condition::III, floor, cfg.alpha + cfg.beta),
        (Condition::IV, 0.0, cfg.alpha + cfg.beta + cfg.gamma),
    ];
    let mut boundary: Vec<Condition> = checks
        .iter()
        .filter(|(_, lo, v)| (v - lo).abs() <= slack)
        .map(|c| c.0)
        .collect();
    if ok && (cfg.inv_r() - 1.0 / cfg.p - 1.0 / cfg.q).abs() <= slack {
        boundary.push(Condition::RVsPq);
    }
    if !ok {
        return Classification {
            verdict: Verdict::Inadmissible,
            witnesses: adm_w,
            boundary,
        };
    }
    let witnesses: Vec<Condition> = checks
        .iter()
        .filter(|(_, lo, v)| !weak(*lo, *v, slack))
        .map(|c| c.0)
        .collect();
    Classification {
        verdict: if witnesses.is_empty() {
            Verdict::Bounded
        } else {
            Verdict::Unbounded
        },
        witnesses,
        boundary,
    }
}

/// The unweighted-output specialisation: (I) `α ≤ Q−λ`, (II) `β ≤ Q−λ`,
/// (III) `−Q+λ ≤ α+β`, under `α < Q/p′`, `β < Q/q′`, `−Q/r < α+β` with
/// `1/r = 1/p + 1/q − λ/Q`.
pub fn stein_weiss_characterize(alpha: f64, beta: f64, lambda: f64, p: f64, q: f64, q_dim: f64) -> Classification {
    stein_weiss_with_slack(alpha, beta, lambda, p, q, q_dim, DEFAULT_SLACK)
}

pub fn stein_weiss_with_slack(
    alpha: f64,
    beta: f64,
    lambda: f64,
    p: f64,
    q: f64,
    q_dim: f64,
    slack: f64,
) -> Classification {
    let inv_r = 1.0 / p + 1.0 / q - lambda / q_dim;
    let mut adm = Vec::new();
    if !strict(alpha, q_dim * (1.0 - 1.0 / p), slack) {
        adm.push(Condition::AlphaBound);
    }
    if !strict(beta, q_dim * (1.0 - 1.0 / q), slack) {
        adm.push(Condition::BetaBound);
    }
    if !strict(-q_dim * inv_r, alpha + beta, slack) {
        adm.push(Condition::GammaBound);
    }
    if !strict(0.0, inv_r, slack) {
        adm.push(Condition::HomogeneityPositivity);
    }
    let top = q_dim - lambda;
    let checks = [
        (Condition::I, alpha, top),
        (Condition::II, beta, top),
        (Condition::III, -top, alpha + beta),
    ];
    let boundary: Vec<Condition> = checks
        .iter()
        .filter(|(_, a, b)| (a - b).abs() <= slack)
        .map(|c| c.0)
        .collect();
    if !adm.is_empty() {
        return Classification {
            verdict: Verdict::Inadmissible,
            witnesses: adm,
            boundary,
        };
    }
    let witnesses: Vec<Condition> = checks
        .iter()
        .filter(|(_, a, b)| !weak(*a, *b, slack))
        .map(|c| c.0)
        .collect();
    Classification {
        verdict: if witnesses.is_empty() {
            Verdict::Bounded
        } else {
            Verdict::Unbounded
        },
        witnesses,
        boundary,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(lambda: f64, p: f64, q: f64, a: f64, b: f64, g: f64) -> ExponentConfig {
        ExponentConfig::new(1, lambda, p, q, a, b, g).unwrap()
    }

    #[test]
    fn derived_r_examples() {
        let d = cfg(1.0, 2.0, 2.0, 0.0, 0.0, 0.0).derived_r().unwrap();
        assert!((d.r - 4.0 / 3.0).abs() < 1e-14);
        assert!(!d.near_degenerate);
        let d = derived_r(2.0, 2.0, 4.0 - 1e-6, 0.0, 0.0, 0.0, 4.0).unwrap();
        assert!(d.near_degenerate);
        assert!(matches!(
            derived_r(2.0, 2.0, 4.0, 0.0, 0.0, 0.0, 4.0),
            Err(Error::NonPositiveInverseR { .. })
        ));
        // α+β+γ = λ puts 1/r on 1/p + 1/q
        let d = cfg(1.0, 2.0, 2.0, 0.25, 0.25, 0.5).derived_r().unwrap();
        assert!((d.inv_r - 1.0).abs() < 1e-14);
    }

    #[test]
    fn admissible_examples() {
        assert!(admissible(&cfg(1.0, 2.0, 2.0, 0.0, 0.0, 0.0)).0);
        let (ok, w) = admissible(&cfg(1.0, 2.0, 2.0, 2.1, 0.0, 0.0));
        assert!(!ok);
        assert_eq!(w[0], Condition::AlphaBound);
    }

    #[test]
    fn gamma_at_edge_is_inadmissible() {
        // with λ = α + β (so (λ−α−β−γ)/Q = −γ/Q), γ < Q/r reads γ < Q(1/p+1/q) + γ: always true.
        // Choose values solving γ = Q/r directly: 1/r = 1/p+1/q − (λ−α−β)/Q + γ/Q,
        // so γ = Q/r iff 1/p + 1/q = (λ−α−β)/Q.
        let c = ExponentConfig {
            n: 1,
            lambda: 1.0,
            p: 2.0,
            q: 2.0,
            alpha: -1.5,
            beta: -1.5,
            gamma: 0.3,
        };
        assert!((c.gamma - c.q_dim() * c.inv_r()).abs() < 1e-12);
        let cl = characterize(&c);
        assert_eq!(cl.verdict, Verdict::Inadmissible);
        assert!(cl.witnesses.contains(&Condition::GammaBound));
    }

    #[test]
    fn characterize_examples() {
        let b = characterize(&cfg(1.0, 2.0, 2.0, 0.0, 0.0, 0.0));
        assert_eq!(b.verdict, Verdict::Bounded);
        assert!(b.witnesses.is_empty());
        assert_eq!(b.boundary, vec![Condition::IV]);

        // α = Q − λ + ½, β = 0, γ = −Q + λ, with p large enough that Q/p′ > 3.5
        let c = characterize(&cfg(1.0, 20.0, 2.0, 3.5, 0.0, -3.0));
        assert_eq!(c.verdict, Verdict::Bounded, "{c:?}");

        let u = characterize(&cfg(1.0, 1.6, 1.6, -2.0, -1.5, 4.0));
        assert_eq!(u.verdict, Verdict::Unbounded, "{u:?}");
        assert_eq!(u.witnesses, vec![Condition::III]);
    }

    #[test]
    fn stein_weiss_examples() {
        assert_eq!(stein_weiss_characterize(0.0, 0.0, 1.0, 2.0, 2.0, 4.0).verdict, Verdict::Bounded);
        let edge = stein_weiss_characterize(3.0, 0.0, 1.0, 8.0, 2.0, 4.0);
        assert_eq!(edge.verdict, Verdict::Bounded, "{edge:?}");
        assert_eq!(edge.boundary, vec![Condition::I]);
        let over = stein_weiss_characterize(3.01, 0.0, 1.0, 8.0, 2.0, 4.0);
        assert_eq!(over.verdict, Verdict::Unbounded);
        assert_eq!(over.witnesses, vec![Condition::I]);
    }

    #[test]
    fn config_domain_checked() {
        assert!(ExponentConfig::new(1, 0.0, 2.0, 2.0, 0.0, 0.0, 0.0).is_err());
        assert!(ExponentConfig::new(1, 4.0, 2.0, 2.0, 0.0, 0.0, 0.0).is_err());
        assert!(ExponentConfig::new(1, 1.0, 1.0, 2.0, 0.0, 0.0, 0.0).is_err());
        assert!(ExponentConfig::new(0, 1.0, 2.0, 2.0, 0.0, 0.0, 0.0).is_err());
    }
}
