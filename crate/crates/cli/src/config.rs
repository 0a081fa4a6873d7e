//! Experiment configuration files.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use loblab_core::limit::{default_dt, LimitGrid};
use loblab_core::model::{Kernel, ModelSpec, Side};
use loblab_core::scenarios;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "scenarios::reference_model")]
    pub model: ModelSpec,
    /// Absolute test functions for volume pairings.
    #[serde(default)]
    pub test_functions: Vec<TestFunction>,
    pub run: RunConfig,
    #[serde(default)]
    pub limit: LimitConfig,
    #[serde(default)]
    pub sweep: SweepSettings,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFunction {
    pub side: Side,
    pub kernel: Kernel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n_list: Vec<u32>,
    pub horizon: f64,
    /// Defaults to `[horizon]`.
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default = "one")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitConfig {
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub spacing: f64,
    /// Defaults to `horizon / 2048`.
    pub dt: Option<f64>,
}

impl Default for LimitConfig {
    fn default() -> Self {
        Self { grid_lo: -8.0, grid_hi: 8.0, spacing: 0.01, dt: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSettings {
    pub bootstrap_resamples: usize,
    pub alpha: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self { bootstrap_resamples: 1000, alpha: 0.01 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: None, formats: vec![Format::Csv, Format::Binary] }
    }
}

/// One problem found while validating, located by its dotted field path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration:\n{}", .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    Validation(Vec<FieldError>),
}

impl ConfigError {
    pub fn field_errors(&self) -> &[FieldError] {
        match self {
            ConfigError::Validation(v) => v,
            _ => &[],
        }
    }
}

fn err(path: impl Into<String>, message: impl Into<String>) -> FieldError {
    FieldError { path: path.into(), message: message.into() }
}

/// Core model errors look like `flow.bid.cancel.size: ...`; keep the path.
fn model_error(section: &str, e: loblab_core::Error) -> FieldError {
    let text = match e {
        loblab_core::Error::InvalidModel(m) => m,
        other => other.to_string(),
    };
    match text.split_once(": ") {
        Some((head, rest)) if head.starts_with(section) && !head.contains(' ') => err(format!("model.{head}"), rest),
        _ => err(format!("model.{section}"), text),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)
            .map_err(|e| ConfigError::Parse { path: PathBuf::from("<string>"), message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::from_toml(&text).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse { path: path.into(), message },
            other => other,
        })
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        if self.run.snapshot_times.is_empty() {
            vec![self.run.horizon]
        } else {
            self.run.snapshot_times.clone()
        }
    }

    pub fn dt(&self) -> f64 {
        self.limit.dt.unwrap_or_else(|| default_dt(self.run.horizon))
    }

    pub fn grid(&self) -> LimitGrid {
        LimitGrid::new(self.limit.grid_lo, self.limit.grid_hi, self.limit.spacing).expect("validated grid")
    }

    /// Test functions in the form the sweep expects.
    pub fn kernels(&self) -> Vec<(Side, Kernel)> {
        self.test_functions.iter().map(|t| (t.side, t.kernel.clone())).collect()
    }

    /// Collects every problem rather than stopping at the first.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errors = Vec::new();
        if let Err(e) = self.model.flow.validate() {
            errors.push(model_error("flow", e));
        }
        if let Err(e) = self.model.price.validate() {
            errors.push(model_error("price", e));
        }
        if let Err(e) = self.model.initial.validate() {
            errors.push(model_error("initial", e));
        }
        for (i, t) in self.test_functions.iter().enumerate() {
            if let Err(e) = t.kernel.validate() {
                errors.push(err(format!("test_functions[{i}].kernel"), e.to_string()));
            }
        }

        let run = &self.run;
        if run.n_list.is_empty() {
            errors.push(err("run.n_list", "must not be empty"));
        }
        for (i, &n) in run.n_list.iter().enumerate() {
            if n == 0 {
                errors.push(err(format!("run.n_list[{i}]"), "scale index must be at least 1"));
            }
        }
        if !(run.horizon.is_finite() && run.horizon >= 0.0) {
            errors.push(err("run.horizon", format!("must be finite and >= 0, got {}", run.horizon)));
        }
        for (i, &t) in run.snapshot_times.iter().enumerate() {
            if !(0.0..=run.horizon).contains(&t) {
                errors.push(err(format!("run.snapshot_times[{i}]"), format!("{t} is outside [0, horizon]")));
            }
        }
        if run.replications == 0 {
            errors.push(err("run.replications", "must be at least 1"));
        }

        let l = &self.limit;
        if !(l.spacing > 0.0 && l.spacing.is_finite()) {
            errors.push(err("limit.spacing", format!("must be positive, got {}", l.spacing)));
        }
        if !(l.grid_lo.is_finite() && l.grid_hi.is_finite() && l.grid_hi > l.grid_lo) {
            errors.push(err("limit.grid_hi", "grid must satisfy grid_lo < grid_hi"));
        }
        if let Some(dt) = l.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                errors.push(err("limit.dt", format!("must be positive, got {dt}")));
            }
        }
        let s = &self.sweep;
        if !(s.alpha > 0.0 && s.alpha < 1.0) {
            errors.push(err("sweep.alpha", format!("must lie in (0, 1), got {}", s.alpha)));
        }
        if s.bootstrap_resamples < 2 {
            errors.push(err("sweep.bootstrap_resamples", "must be at least 2"));
        }

        if errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Validation(errors))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[run]\nn_list = [16]\nhorizon = 1.0\n";

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.run.replications, 1);
        assert_eq!(cfg.snapshot_times(), vec![1.0]);
        assert_eq!(cfg.model, scenarios::reference_model());
        assert_eq!(cfg.sweep.bootstrap_resamples, 1000);
        assert_eq!(cfg.output.formats, vec![Format::Csv, Format::Binary]);
        assert!((cfg.dt() - 1.0 / 2048.0).abs() < 1e-15);
    }

    #[test]
    fn zero_scale_is_named() {
        let e = ExperimentConfig::from_toml("[run]\nn_list = [16, 0]\nhorizon = 1.0\n").unwrap_err();
        assert_eq!(e.field_errors()[0].path, "run.n_list[1]");
    }

    #[test]
    fn all_errors_are_reported() {
        let e = ExperimentConfig::from_toml("[run]\nn_list = []\nhorizon = -1.0\nreplications = 0\n").unwrap_err();
        let paths: Vec<&str> = e.field_errors().iter().map(|f| f.path.as_str()).collect();
        assert_eq!(paths, ["run.n_list", "run.horizon", "run.replications"]);
    }

    #[test]
    fn unknown_keys_are_parse_errors() {
        let e = ExperimentConfig::from_toml("[run]\nn_list = [4]\nhorizon = 1.0\nhorizn = 2.0\n").unwrap_err();
        assert!(matches!(e, ConfigError::Parse { .. }), "{e}");
    }

    #[test]
    fn reference_model_round_trips_through_toml() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    }
}
