//! TOML experiment configuration.
//!
//! ```toml
//! [exponents]
//! n = 1
//! lambda = 1.0
//! p = 2.0
//! q = 2.0
//!
//! [quadrature]
//! k_min = -2
//! k_max = 14
//! samples_per_shell = 4000
//! seed = 7
//!
//! [inputs.f]
//! kind = "indicator_ball"
//! center = [0.0, 0.0, 0.0]
//! radius = 1.0
//! ```
//!
//! Every section is optional; unknown sections or keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::ExponentConfig;
use crate::functions::TestFunction;
use crate::harness::divergence::ScanConfig;
use crate::harness::norms::NormEstimatorConfig;
use crate::quadrature::QuadratureConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    pub f: TestFunction,
    pub g: TestFunction,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponents: Option<ExponentConfig>,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub norms: NormEstimatorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<ScanConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<Inputs>,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.message().to_owned()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.quadrature.validate()?;
        self.norms.validate()?;
        if let Some(e) = &self.exponents {
            e.validate()?;
        }
        if let Some(f) = &self.family {
            f.validate()?;
        }
        if let (Some(inp), Some(e)) = (&self.inputs, &self.exponents) {
            inp.f.validate(e.n)?;
            inp.g.validate(e.n)?;
        }
        Ok(())
    }

    pub fn exponents(&self) -> Result<ExponentConfig> {
        self.exponents
            .ok_or_else(|| Error::Config("missing [exponents] section".into()))
    }

    /// The configured inputs, or `χ_{B(0,1)}` twice.
    pub fn inputs_or_unit_balls(&self, n: usize) -> Result<(TestFunction, TestFunction)> {
        match &self.inputs {
            Some(i) => {
                i.f.validate(n)?;
                i.g.validate(n)?;
                Ok((i.f.clone(), i.g.clone()))
            }
            None => Ok((TestFunction::unit_ball(n), TestFunction::unit_ball(n))),
        }
    }

    /// The `[family]` section, falling back to defaults.
    pub fn scan(&self) -> ScanConfig {
        self.family.clone().unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
[exponents]
n = 1
lambda = 1.0
p = 1.6
q = 1.6
alpha = -1.75
beta = -1.75
gamma = 4.0

[quadrature]
k_min = -1
k_max = 10
samples_per_shell = 2000
seed = 3

[norms]
j_min = -6
j_max = 1
samples_per_stratum = 1000
seed = 4

[family]
N = 4.0
M = 15.5
truncations = [8.0, 16.0]

[inputs.f]
kind = "indicator_ball"
center = [0.0, 0.0, 0.0]
radius = 1.0

[inputs.g]
kind = "power_weight"
s = 1.0
support = { kind = "indicator_cube", corner = [0.0, 0.0, 0.0], r = 1.0 }
"#;

    #[test]
    fn parses_every_section() {
        let c = ExperimentConfig::from_toml_str(FULL).unwrap();
        assert_eq!(c.exponents().unwrap().gamma, 4.0);
        assert_eq!(c.quadrature.samples_per_shell, 2000);
        assert_eq!(c.norms.j_min, -6);
        assert_eq!(c.scan().growth, Some(15.5));
        assert_eq!(c.scan().truncations, vec![8.0, 16.0]);
        let (f, _) = c.inputs_or_unit_balls(1).unwrap();
        assert_eq!(f, TestFunction::unit_ball(1));
    }

    #[test]
    fn round_trips() {
        let c = ExperimentConfig::from_toml_str(FULL).unwrap();
        let back = ExperimentConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn unknown_keys_are_errors() {
        for bad in [
            "[exponents]\nn = 1\nlambda = 1.0\np = 2.0\nq = 2.0\ndelta = 1.0\n",
            "[quadrature]\nk_min = 0\nk_max = 1\nsamples_per_shell = 1000\nseed = 0\nextra = 1\n",
            "[family]\nK = 3\n",
            "[plots]\nx = 1\n",
        ] {
            assert!(matches!(ExperimentConfig::from_toml_str(bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn empty_file_uses_defaults() {
        let c = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(c.quadrature, QuadratureConfig::default());
        assert!(c.exponents().is_err());
        assert_eq!(c.scan(), ScanConfig::default());
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(ExperimentConfig::from_toml_str("[exponents]\nn = 1\nlambda = 5.0\np = 2.0\nq = 2.0\n").is_err());
        assert!(ExperimentConfig::from_toml_str("[norms]\nj_min = 3\nj_max = 1\nsamples_per_stratum = 1000\nseed = 0\n").is_err());
    }
}
