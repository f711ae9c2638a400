//! Run parameters: command-line flags layered over an optional TOML file.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use crate::Failure;

pub const CACHE_ENV: &str = "PROLATE_CACHE_DIR";

/// Every tunable of every subcommand. Keys in the config file use the flag names.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Params {
    /// Bandwidth (side of the cube C_R)
    #[arg(long = "R")]
    #[serde(rename = "R")]
    pub bandwidth: Option<f64>,
    /// Dimension
    #[arg(long)]
    pub d: Option<usize>,
    /// Concentration deficit of the class B(R, delta)
    #[arg(long)]
    pub delta: Option<f64>,
    /// Relative frame tolerance
    #[arg(long)]
    pub mu: Option<f64>,
    /// Number of samples
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Quadrature order of the spectral discretization
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; without it the CSV goes to stdout and the summary to stderr
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Spectrum cache directory (default: $PROLATE_CACHE_DIR)
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Failure probability and net resolution for `bounds`
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub net_size: Option<usize>,
    /// Number of eigenfunctions spanning nets and certificates
    #[arg(long)]
    pub truncation: Option<usize>,
    /// Deviation thresholds (comma separated)
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Option<Vec<f64>>,
    /// Energy ratios k of the counterexample (comma separated)
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<f64>>,
    /// Number of functions drawn by `synth`
    #[arg(long)]
    pub count: Option<usize>,
    /// Point model: iid, per-cube, poisson, log-poisson, sublog-poisson
    #[arg(long)]
    pub model: Option<String>,
    /// Intensity scale c0 of the Poisson models
    #[arg(long)]
    pub c0: Option<f64>,
    /// Exponent of the sub-logarithmic intensity
    #[arg(long)]
    pub exponent: Option<f64>,
    /// Cube side alpha
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Half-width of the observation region
    #[arg(long)]
    pub extent: Option<f64>,
    /// Truncation of the empty-cube series
    #[arg(long)]
    pub n_range: Option<usize>,
    /// Window sides for density diagnostics (comma separated)
    #[arg(long, value_delimiter = ',')]
    pub window_sides: Option<Vec<f64>>,
    #[arg(long)]
    pub grid_step: Option<f64>,
    /// Point file to analyse instead of generating one
    #[arg(long)]
    pub points: Option<PathBuf>,
    /// TOML file with any of the keys above; flags take precedence
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

macro_rules! layer {
    ($flags:ident, $file:ident, $($field:ident),+) => {
        Params { $($field: $flags.$field.or($file.$field),)+ config: $flags.config }
    };
}

impl Params {
    /// Flags override the config file.
    pub fn resolve(self) -> Result<Self, Failure> {
        let Some(path) = self.config.clone() else {
            return Ok(self.with_env());
        };
        let file = load_file(&path)?;
        let flags = self;
        let merged = layer!(
            flags, file, bandwidth, d, delta, mu, r, trials, order, seed, out, cache, eps, net_size, truncation,
            thresholds, k, count, model, c0, exponent, alpha, extent, n_range, window_sides, grid_step, points
        );
        Ok(merged.with_env())
    }

    fn with_env(mut self) -> Self {
        if self.cache.is_none() {
            self.cache = std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
        }
        self
    }
}

fn load_file(path: &Path) -> Result<Params, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

/// Value-or-default with range checks that produce exit code 2.
pub fn positive(name: &str, value: Option<f64>, default: f64) -> Result<f64, Failure> {
    let v = value.unwrap_or(default);
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Failure::Invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

pub fn unit_open(name: &str, value: Option<f64>, default: f64) -> Result<f64, Failure> {
    let v = value.unwrap_or(default);
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(Failure::Invalid(format!("{name} must lie in (0, 1), got {v}")))
    }
}

pub fn count(name: &str, value: Option<usize>, default: usize) -> Result<usize, Failure> {
    match value.unwrap_or(default) {
        0 => Err(Failure::Invalid(format!("{name} must be at least 1"))),
        v => Ok(v),
    }
}
