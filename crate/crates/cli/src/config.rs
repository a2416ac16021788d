//! Settings shared by command-line flags and the TOML config file.
//!
//! The file may set any flag at top level and again inside a `[demo]`,
//! `[encode]` or `[sweep]` table; the table wins for its command, and flags
//! given on the command line win over both.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Deserialize;

#[derive(Debug, Clone, Default, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Bandwidth in rad/s.
    #[arg(long)]
    pub omega: Option<f64>,
    /// Modulo threshold.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Hysteresis.
    #[arg(long)]
    pub h: Option<f64>,
    /// Transient duration in seconds.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Sampling period in seconds.
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub period: Option<f64>,
    /// Half window: samples are taken at (n - K) T for n = 0..=2K.
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub k: Option<usize>,
    /// Peak amplitude of the random test signal.
    #[arg(long)]
    pub peak: Option<f64>,
    /// Signal seed (first seed of a sweep).
    #[arg(long)]
    pub seed: Option<u64>,
    /// omp or saomp.
    #[arg(long)]
    pub solver: Option<String>,
    /// Solver stopping tolerance; calibrated on fold-free signals when unset.
    #[arg(long)]
    pub eps: Option<f64>,
    /// SAOMP initial threshold.
    #[arg(long)]
    pub nu: Option<f64>,
    /// SAOMP pruning threshold.
    #[arg(long)]
    pub mu: Option<f64>,
    /// SAOMP iteration cap.
    #[arg(long)]
    pub imax: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Trials per sweep cell.
    #[arg(long)]
    pub trials: Option<usize>,
    /// MSE above which a sweep trial counts as a failure.
    #[arg(long = "mse-threshold")]
    pub mse_threshold: Option<f64>,
    /// Sweep alpha values as start:stop:count or a comma list.
    #[arg(long = "alpha-grid")]
    pub alpha_grid: Option<String>,
    /// Sweep h values as start:stop:count or a comma list.
    #[arg(long = "h-grid")]
    pub h_grid: Option<String>,
    /// Encoder grid points for `encode`.
    #[arg(long = "grid-points")]
    pub grid_points: Option<usize>,
    /// Worker threads for `sweep`.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Print a JSON document instead of the text summary.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub json: Option<bool>,

    #[arg(skip)]
    pub demo: Option<Box<Settings>>,
    #[arg(skip)]
    pub encode: Option<Box<Settings>>,
    #[arg(skip)]
    pub sweep: Option<Box<Settings>>,
}

macro_rules! overlay_fields {
    ($base:ident, $top:ident; $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field; } )*
    };
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config file {}", path.display()))
    }

    /// Values set in `top` replace those in `self`; command tables are dropped.
    pub fn overlay(mut self, top: &Settings) -> Settings {
        let top = top.clone();
        overlay_fields!(self, top; omega, lambda, h, alpha, period, k, peak, seed, solver, eps, nu, mu,
            imax, out, trials, mse_threshold, alpha_grid, h_grid, grid_points, workers, json);
        self.demo = None;
        self.encode = None;
        self.sweep = None;
        self
    }

    /// Effective settings for `command`: file top level, then the command's
    /// table, then the flags.
    pub fn resolve(file: Option<Settings>, command: &str, flags: &Settings) -> Settings {
        let file = file.unwrap_or_default();
        let table = match command {
            "demo" => file.demo.clone(),
            "encode" => file.encode.clone(),
            "sweep" => file.sweep.clone(),
            _ => None,
        };
        let mut merged = Settings::default().overlay(&file);
        if let Some(t) = table {
            merged = merged.overlay(&t);
        }
        merged.overlay(flags)
    }
}

/// Parses `start:stop:count` or an explicit list `v1,v2,...`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    if !spec.contains(':') {
        let values = spec
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .with_context(|| format!("bad grid value '{v}' in '{spec}'"))
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(values);
    }
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        bail!("grid '{spec}' must look like start:stop:count");
    }
    let a: f64 = parts[0]
        .trim()
        .parse()
        .with_context(|| format!("bad grid start in '{spec}'"))?;
    let b: f64 = parts[1]
        .trim()
        .parse()
        .with_context(|| format!("bad grid stop in '{spec}'"))?;
    let n: usize = parts[2]
        .trim()
        .parse()
        .with_context(|| format!("bad grid count in '{spec}'"))?;
    Ok(modhys_core::experiments::linspace(a, b, n)?)
}
