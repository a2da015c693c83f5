use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::engine::EngineLimits;
use crate::error::{Error, Result};
use crate::spectra::{KorobovParams, SqExpParams, DEFAULT_TRUNC_TOL};

/// Per-coordinate parameter sequence, indexed by `j = 1, 2, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ParamGenerator {
    /// `value`
    Constant { value: f64 },
    /// `scale * j^exponent`
    Power { scale: f64, exponent: f64 },
    /// `scale * j^exponent * ln(j + 1)^log_exponent`
    LogPower {
        scale: f64,
        exponent: f64,
        log_exponent: f64,
    },
    /// `values[j - 1]`
    ExplicitList { values: Vec<f64> },
}

impl ParamGenerator {
    /// Value for coordinate `j >= 1`, `None` past the end of an explicit list.
    pub fn at(&self, j: usize) -> Option<f64> {
        let jf = j as f64;
        match self {
            ParamGenerator::Constant { value } => Some(*value),
            ParamGenerator::Power { scale, exponent } => Some(scale * jf.powf(*exponent)),
            ParamGenerator::LogPower {
                scale,
                exponent,
                log_exponent,
            } => Some(scale * jf.powf(*exponent) * jf.ln_1p().powf(*log_exponent)),
            ParamGenerator::ExplicitList { values } => values.get(j.checked_sub(1)?).copied(),
        }
    }

    pub fn take(&self, count: usize) -> Result<Vec<f64>> {
        (1..=count)
            .map(|j| {
                self.at(j)
                    .ok_or_else(|| Error::Config(format!("parameter list has no entry for coordinate {j}")))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitCoordinate {
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<f64>,
}

/// Kernel family and its per-coordinate parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyConfig {
    Korobov { g: ParamGenerator, r: ParamGenerator },
    SquaredExponential { sigma: ParamGenerator },
    Explicit { coordinates: Vec<ExplicitCoordinate> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    Complexity,
    ErrorCurve,
    Criteria,
    QptFit,
}

fn default_gamma() -> f64 {
    0.5
}

fn default_trunc_tol() -> f64 {
    DEFAULT_TRUNC_TOL
}

fn default_outputs() -> BTreeSet<Output> {
    [Output::Complexity].into_iter().collect()
}

/// One sweep over a `(d, eps)` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub d_grid: Vec<usize>,
    pub eps_grid: Vec<f64>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default = "default_trunc_tol")]
    pub trunc_tol: f64,
    /// Cap on retained eigenvalues per coordinate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_len: Option<usize>,
    /// Largest `n` the engine may reach at one sweep point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_n: Option<usize>,
    /// Largest frontier the engine may hold at one sweep point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_queue: Option<usize>,
    /// Largest number of steps in one threshold count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_work: Option<u64>,
    #[serde(default = "default_outputs")]
    pub outputs: BTreeSet<Output>,
    pub family: FamilyConfig,
}

impl SweepConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: SweepConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn max_d(&self) -> usize {
        self.d_grid.last().copied().unwrap_or(0)
    }

    pub fn limits(&self) -> EngineLimits {
        let default = EngineLimits::default();
        EngineLimits {
            max_queue: self.max_queue.unwrap_or(default.max_queue),
            max_n: self.max_n.unwrap_or(default.max_n),
            max_work: self.max_work.unwrap_or(default.max_work),
        }
    }

    pub fn wants(&self, output: Output) -> bool {
        self.outputs.contains(&output)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.d_grid.is_empty() {
            return bad("d_grid is empty".into());
        }
        if self.d_grid[0] == 0 || self.d_grid.windows(2).any(|w| w[1] <= w[0]) {
            return bad("d_grid must be strictly increasing positive integers".into());
        }
        if self.eps_grid.is_empty() {
            return bad("eps_grid is empty".into());
        }
        if self.eps_grid.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return bad("eps_grid values must lie in (0, 1)".into());
        }
        if self.eps_grid.windows(2).any(|w| w[1] >= w[0]) {
            return bad("eps_grid must be strictly decreasing".into());
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if let Some(tau) = self.tau {
            if !(tau > 0.0) || !tau.is_finite() {
                return bad(format!("tau must be positive, got {tau}"));
            }
        }
        if !(self.trunc_tol > 0.0 && self.trunc_tol < 1.0) {
            return bad(format!("trunc_tol must lie in (0, 1), got {}", self.trunc_tol));
        }
        if matches!(self.max_len, Some(m) if m < 3) {
            return bad("max_len must be at least 3".into());
        }
        if self.max_n == Some(0) || self.max_queue == Some(0) || self.max_work == Some(0) {
            return bad("max_n, max_queue and max_work must be positive".into());
        }
        if self.outputs.is_empty() {
            return bad("no outputs requested".into());
        }
        if self.wants(Output::QptFit) {
            if self.d_grid.len() < 2 || self.eps_grid.len() < 2 || self.d_grid.len() * self.eps_grid.len() < 4 {
                return bad("qpt_fit needs at least two d values, two eps values and four grid points".into());
            }
        }
        self.validate_family()
    }

    fn validate_family(&self) -> Result<()> {
        let d = self.max_d();
        let wrap = |j: usize, e: Error| Error::Config(format!("coordinate {j}: {e}"));
        match &self.family {
            FamilyConfig::Korobov { g, r } => {
                let (gs, rs) = (g.take(d)?, r.take(d)?);
                for (j, (g, r)) in gs.into_iter().zip(rs).enumerate() {
                    KorobovParams::new(g, r).map_err(|e| wrap(j + 1, e))?;
                }
            }
            FamilyConfig::SquaredExponential { sigma } => {
                for (j, s) in sigma.take(d)?.into_iter().enumerate() {
                    SqExpParams::new(s).map_err(|e| wrap(j + 1, e))?;
                }
            }
            FamilyConfig::Explicit { coordinates } => {
                if coordinates.len() < d {
                    return Err(Error::Config(format!(
                        "explicit family lists {} coordinates but d_grid reaches {d}",
                        coordinates.len()
                    )));
                }
                for (j, c) in coordinates.iter().take(d).enumerate() {
                    crate::spectra::explicit_spectrum(&c.values, c.trace).map_err(|e| wrap(j + 1, e))?;
                }
            }
        }
        Ok(())
    }

    pub fn korobov_params(&self) -> Result<Option<Vec<KorobovParams>>> {
        match &self.family {
            FamilyConfig::Korobov { g, r } => {
                let d = self.max_d();
                g.take(d)?
                    .into_iter()
                    .zip(r.take(d)?)
                    .map(|(g, r)| KorobovParams::new(g, r))
                    .collect::<Result<Vec<_>>>()
                    .map(Some)
            }
            _ => Ok(None),
        }
    }

    pub fn sqexp_params(&self) -> Result<Option<Vec<SqExpParams>>> {
        match &self.family {
            FamilyConfig::SquaredExponential { sigma } => sigma
                .take(self.max_d())?
                .into_iter()
                .map(SqExpParams::new)
                .collect::<Result<Vec<_>>>()
                .map(Some),
            _ => Ok(None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KOROBOV: &str = r#"
d_grid = [1, 2, 4, 8]
eps_grid = [0.5, 0.1]
outputs = ["complexity", "criteria"]

[family]
kind = "korobov"
g = { kind = "power", scale = 1.0, exponent = -2.0 }
r = { kind = "constant", value = 1.0 }
"#;

    #[test]
    fn parses_korobov_config() {
        let c = SweepConfig::from_toml_str(KOROBOV).unwrap();
        assert_eq!(c.d_grid, vec![1, 2, 4, 8]);
        assert_eq!(c.gamma, 0.5);
        assert_eq!(c.trunc_tol, 1e-12);
        assert_eq!(c.tau, None);
        let params = c.korobov_params().unwrap().unwrap();
        assert_eq!(params.len(), 8);
        assert_eq!(params[1].g, 0.25);
        assert_eq!(params[3].r, 1.0);
    }

    #[test]
    fn toml_round_trip() {
        let c = SweepConfig::from_toml_str(KOROBOV).unwrap();
        let text = c.to_toml_string().unwrap();
        assert_eq!(SweepConfig::from_toml_str(&text).unwrap(), c);
    }

    #[test]
    fn generators() {
        let g = ParamGenerator::LogPower {
            scale: 1.0,
            exponent: 0.5,
            log_exponent: 1.5,
        };
        let v = g.at(3).unwrap();
        assert!((v * v - 3.0 * 4f64.ln().powi(3)).abs() < 1e-12);
        let l = ParamGenerator::ExplicitList { values: vec![1.0, 2.0] };
        assert_eq!(l.at(2), Some(2.0));
        assert_eq!(l.at(3), None);
        assert!(l.take(3).is_err());
    }

    #[test]
    fn rejects_invalid_configs() {
        let cases = [
            KOROBOV.replace("[1, 2, 4, 8]", "[]"),
            KOROBOV.replace("[1, 2, 4, 8]", "[2, 1]"),
            KOROBOV.replace("[0.5, 0.1]", "[0.1, 0.5]"),
            KOROBOV.replace("[0.5, 0.1]", "[1.5]"),
            KOROBOV.replace("scale = 1.0", "scale = 2.0"),
            KOROBOV.replace("value = 1.0", "value = 0.4"),
            KOROBOV.replace("outputs = [\"complexity\", \"criteria\"]", "outputs = [\"bogus\"]"),
            KOROBOV.replace("d_grid = [1, 2, 4, 8]", "d_grid = [1, 2, 4, 8]\ngamma = 1.5"),
            KOROBOV.replace("d_grid = [1, 2, 4, 8]", "d_grid = [1, 2, 4, 8]\nunknown = 3"),
            KOROBOV.replace("d_grid = [1, 2, 4, 8]\neps_grid = [0.5, 0.1]", "d_grid = [4]\neps_grid = [0.5, 0.1]")
                .replace("\"criteria\"", "\"qpt_fit\""),
        ];
        for text in cases {
            assert!(SweepConfig::from_toml_str(&text).is_err(), "{text}");
        }
    }

    #[test]
    fn explicit_family_needs_enough_coordinates() {
        let text = r#"
d_grid = [1, 2]
eps_grid = [0.5]

[family]
kind = "explicit"

[[family.coordinates]]
values = [1.0, 0.5]
"#;
        assert!(SweepConfig::from_toml_str(text).is_err());
        let ok = text.replace("d_grid = [1, 2]", "d_grid = [1]");
        assert!(SweepConfig::from_toml_str(&ok).is_ok());
    }
}
