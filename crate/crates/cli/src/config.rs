//! Run configuration: defaults per subcommand, overlaid by a TOML file,
//! overlaid by command-line flags.

use std::path::{Path, PathBuf};

use cmjlab::malthus::{DEFAULT_QUAD_TOL, DEFAULT_ROOT_TOL};
use cmjlab::moments::{linear_grid, log_grid, DEFAULT_EVENT_BUDGET};
use cmjlab::{Characteristic, ModelParams, Tolerances, WeightTable};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const OUT_DIR_ENV: &str = "CMJLAB_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridScale {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CharKind {
    Born,
    Alive,
    Weighted,
}

/// Effective configuration of one run. Thread count is not part of it:
/// results do not depend on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    pub b: f64,
    pub c: f64,
    pub p: f64,
    pub horizon: f64,
    pub event_budget: usize,
    pub replicas: usize,
    pub seed: u64,
    pub k: f64,
    pub t_start: f64,
    /// Defaults to `horizon`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_stop: Option<f64>,
    pub t_points: usize,
    pub t_scale: GridScale,
    /// Falls back to the environment variable, then the working directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Output file stem, or full file name for `relabel`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    pub quad_tol: f64,
    pub root_tol: f64,
    pub characteristic: CharKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub knots: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weights: Vec<f64>,
    /// `alpha`, `beta`, or a number.
    pub rate: String,
    pub horizons: Vec<f64>,
    pub depth_cap: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    pub aggregate: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snapshots: Vec<f64>,
    /// Sample size for single-life Monte Carlo estimates.
    pub lives: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
}

impl RunConfig {
    pub fn defaults(command: &str) -> Self {
        let mut cfg = Self {
            command: command.to_string(),
            b: 0.1,
            c: 0.1,
            p: 0.5,
            horizon: 6.0,
            event_budget: DEFAULT_EVENT_BUDGET,
            replicas: 100,
            seed: 1,
            k: 2.0,
            t_start: 0.0,
            t_stop: None,
            t_points: 21,
            t_scale: GridScale::Linear,
            out_dir: None,
            output: None,
            quad_tol: DEFAULT_QUAD_TOL,
            root_tol: DEFAULT_ROOT_TOL,
            characteristic: CharKind::Born,
            knots: Vec::new(),
            weights: Vec::new(),
            rate: "alpha".into(),
            horizons: vec![2.0, 4.0, 6.0, 8.0],
            depth_cap: 64,
            input: None,
            aggregate: false,
            snapshots: Vec::new(),
            lives: 10_000,
            c1: None,
        };
        match command {
            "moments" => {
                cfg.replicas = 500;
                cfg.t_points = 20;
            }
            "maxdeg" => cfg.k = 3.0,
            "crosscheck" => {
                cfg.horizon = 3.0;
                cfg.replicas = 1000;
                cfg.lives = 100_000;
            }
            _ => {}
        }
        cfg
    }

    /// Defaults for `command` with the keys of a TOML file laid over them.
    pub fn from_file(command: &str, path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        Self::from_toml(command, &text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    pub fn from_toml(command: &str, text: &str) -> Result<Self, String> {
        let file: toml::Table = text.parse().map_err(|e: toml::de::Error| e.to_string())?;
        let mut merged = toml::Table::try_from(Self::defaults(command)).map_err(|e| e.to_string())?;
        for (key, value) in file {
            merged.insert(key, value);
        }
        merged.insert("command".into(), toml::Value::String(command.into()));
        merged.try_into().map_err(|e: toml::de::Error| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes to TOML")
    }

    /// Rejects out-of-range values before any work starts.
    pub fn validate(&self) -> Result<(), CliError> {
        self.params()?;
        let bad = |field: &str, why: String| Err(CliError::Input(format!("invalid `{field}`: {why}")));
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.horizon) {
            return bad("horizon", format!("must be finite and positive, got {}", self.horizon));
        }
        if self.seed > i64::MAX as u64 {
            return bad(
                "seed",
                format!("must be at most {} to fit a config file, got {}", i64::MAX, self.seed),
            );
        }
        if self.event_budget == 0 {
            return bad("event_budget", "must be positive".into());
        }
        if self.replicas < 2 {
            return bad("replicas", format!("need at least 2, got {}", self.replicas));
        }
        if !(self.k.is_finite() && self.k >= 1.0) {
            return bad("k", format!("must be at least 1, got {}", self.k));
        }
        if !(self.t_start.is_finite() && self.t_start >= 0.0) {
            return bad(
                "t_start",
                format!("must be finite and nonnegative, got {}", self.t_start),
            );
        }
        let stop = self.t_stop();
        if !(stop.is_finite() && stop >= self.t_start) {
            return bad("t_stop", format!("must be finite and at least t_start, got {stop}"));
        }
        if self.t_points == 0 {
            return bad("t_points", "must be positive".into());
        }
        if self.t_scale == GridScale::Log && !(self.t_start > 0.0) {
            return bad("t_start", "a log grid needs t_start > 0".into());
        }
        if !positive(self.quad_tol) {
            return bad(
                "quad_tol",
                format!("must be finite and positive, got {}", self.quad_tol),
            );
        }
        if !positive(self.root_tol) {
            return bad(
                "root_tol",
                format!("must be finite and positive, got {}", self.root_tol),
            );
        }
        self.characteristic()?;
        self.rate_spec()?;
        if self.horizons.is_empty()
            || !self.horizons.iter().all(|&h| positive(h))
            || self.horizons.windows(2).any(|w| !(w[1] > w[0]))
        {
            return bad("horizons", "must be positive and strictly increasing".into());
        }
        if self.depth_cap == 0 {
            return bad("depth_cap", "must be positive".into());
        }
        if let Some(t) = self.snapshots.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return bad("snapshots", format!("times must be finite and nonnegative, got {t}"));
        }
        if self.lives < 2 {
            return bad("lives", format!("need at least 2, got {}", self.lives));
        }
        if let Some(c1) = self.c1 {
            if !positive(c1) {
                return bad("c1", format!("must be finite and positive, got {c1}"));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        ModelParams::new(self.b, self.c, self.p).map_err(CliError::from)
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            quadrature: self.quad_tol,
            root: self.root_tol,
        }
    }

    pub fn t_stop(&self) -> f64 {
        self.t_stop.unwrap_or(self.horizon)
    }

    pub fn t_grid(&self) -> Vec<f64> {
        match self.t_scale {
            GridScale::Linear => linear_grid(self.t_start, self.t_stop(), self.t_points),
            GridScale::Log => log_grid(self.t_start, self.t_stop(), self.t_points),
        }
    }

    pub fn characteristic(&self) -> Result<Characteristic, CliError> {
        Ok(match self.characteristic {
            CharKind::Born => Characteristic::Born,
            CharKind::Alive => Characteristic::Alive,
            CharKind::Weighted => Characteristic::Weighted(WeightTable::new(self.knots.clone(), self.weights.clone())?),
        })
    }

    pub fn rate_spec(&self) -> Result<RateSpec, CliError> {
        match self.rate.as_str() {
            "alpha" => Ok(RateSpec::Alpha),
            "beta" => Ok(RateSpec::Beta),
            s => match s.parse::<f64>() {
                Ok(x) if x.is_finite() && x >= 0.0 => Ok(RateSpec::Value(x)),
                _ => Err(CliError::Input(format!(
                    "invalid `rate`: expected alpha, beta or a nonnegative number, got {s}"
                ))),
            },
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn stem(&self) -> &str {
        self.output.as_deref().unwrap_or(&self.command)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateSpec {
    Alpha,
    Beta,
    Value(f64),
}
