//! Experiment runners behind the command-line tool: a single reconstruction
//! demo, the encoder comparison, and the `(alpha, h)` failure sweep. Each
//! writes a CSV table and an SVG figure.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoder::{
    encode_generalized, encode_modified, EncodedTrace, Fold, HysteresisParams, TimeGrid,
};
use crate::error::{invalid, Result};
use crate::pipeline::{
    calibrate_tolerance, end_to_end_trial, TrialOutcome, TrialSpec, CALIBRATION_SIGNALS,
};
use crate::plot::{heat_map, line_plot, Series};
use crate::signal::{generate_random_pw, BandlimitedSignal, POINTS_PER_SAMPLE};
use crate::sparse::{SolverConfig, SolverKind};

/// Formats a float with 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// `n` evenly spaced values from `a` to `b` inclusive; `n = 1` gives `[a]`.
pub fn linspace(a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
    match n {
        0 => Err(invalid("a grid needs at least one point")),
        1 => Ok(vec![a]),
        _ => Ok((0..n)
            .map(|i| {
                if i == n - 1 {
                    b
                } else {
                    a + (b - a) * i as f64 / (n - 1) as f64
                }
            })
            .collect()),
    }
}

/// Default stopping tolerance for a sampling setup and threshold.
pub fn default_tolerance(omega: f64, k: usize, period: f64, lambda: f64) -> Result<f64> {
    calibrate_tolerance(omega, k, period, lambda, CALIBRATION_SIGNALS)
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(w)
}

// ---------------------------------------------------------------- demo

pub fn run_demo(spec: &TrialSpec) -> Result<TrialOutcome> {
    end_to_end_trial(spec)
}

/// Columns `t, g, encoded, recovered`, one row per sample.
pub fn write_demo_csv<W: Write>(outcome: &TrialOutcome, w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["t", "g", "encoded", "recovered"])?;
    for i in 0..outcome.times.len() {
        out.write_record([
            fmt_float(outcome.times[i]),
            fmt_float(outcome.truth[i]),
            fmt_float(outcome.encoded[i]),
            fmt_float(outcome.report.recovered_samples[i]),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn demo_svg(outcome: &TrialOutcome) -> String {
    let fine = dense_times(&outcome.times, 10);
    let g_fine = outcome.signal.sample(&fine);
    line_plot(
        &format!("Reconstruction, MSE = {:.3e}", outcome.mse()),
        "t [s]",
        &[
            Series {
                label: "g",
                color: "black",
                x: &fine,
                y: &g_fine,
                markers: false,
            },
            Series {
                label: "modulo samples",
                color: "#1f77b4",
                x: &outcome.times,
                y: &outcome.encoded,
                markers: true,
            },
            Series {
                label: "recovered samples",
                color: "#d62728",
                x: &outcome.times,
                y: &outcome.report.recovered_samples,
                markers: true,
            },
        ],
    )
}

fn dense_times(times: &[f64], per_interval: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len() * per_interval);
    for w in times.windows(2) {
        for j in 0..per_interval {
            out.push(w[0] + (w[1] - w[0]) * j as f64 / per_interval as f64);
        }
    }
    out.extend(times.last());
    out
}

// ---------------------------------------------------------------- encode

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EncodeSpec {
    pub omega: f64,
    pub k: usize,
    pub period: f64,
    pub params: HysteresisParams,
    pub peak: f64,
    pub seed: u64,
    /// Points of the uniform grid on `[-KT, KT]`.
    pub grid_points: usize,
}

impl Default for EncodeSpec {
    /// lambda = 0.2, h = 0.1, alpha = 0.3 on the default sampling window.
    fn default() -> Self {
        let k = 48;
        let period = 0.0208;
        Self {
            omega: 6.3,
            k,
            period,
            params: HysteresisParams {
                lambda: 0.2,
                h: 0.1,
                alpha: 0.3,
                tau0: -(k as f64) * period,
            },
            peak: 0.6,
            seed: 1,
            grid_points: 10_001,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EncodeOutcome {
    pub signal: BandlimitedSignal,
    pub grid: TimeGrid,
    pub generalized: EncodedTrace,
    pub modified: EncodedTrace,
}

impl EncodeOutcome {
    pub fn max_abs_generalized(&self) -> f64 {
        self.generalized.max_abs_output()
    }

    pub fn max_abs_modified(&self) -> f64 {
        self.modified.max_abs_output()
    }
}

pub fn run_encode(spec: &EncodeSpec) -> Result<EncodeOutcome> {
    let g = generate_random_pw(spec.omega, spec.k, spec.period, spec.peak, spec.seed)?;
    let end = spec.k as f64 * spec.period;
    let grid = TimeGrid::spanning(spec.params.tau0.min(-end), end, spec.grid_points)?;
    let generalized = encode_generalized(&g, &spec.params, &grid)?;
    let modified = encode_modified(&g, &spec.params, &grid)?;
    Ok(EncodeOutcome {
        signal: g,
        grid,
        generalized,
        modified,
    })
}

/// Net fold sign in `(t_{i-1}, t_i]` for every grid point (the first point
/// also takes folds at or before it).
fn fold_markers(folds: &[Fold], grid: &TimeGrid) -> Vec<f64> {
    let mut markers = vec![0.0; grid.count];
    for f in folds {
        let i = ((f.time - grid.start) / grid.step)
            .ceil()
            .clamp(0.0, (grid.count - 1) as f64) as usize;
        // Guard against the ceiling landing one step late through rounding.
        let i = if i > 0 && grid.time(i - 1) >= f.time {
            i - 1
        } else {
            i
        };
        markers[i] += f.sign;
    }
    markers
}

/// Columns `t, g, generalized, modified, fold_generalized, fold_modified`.
pub fn write_encode_csv<W: Write>(outcome: &EncodeOutcome, w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record([
        "t",
        "g",
        "generalized",
        "modified",
        "fold_generalized",
        "fold_modified",
    ])?;
    let mg = fold_markers(&outcome.generalized.folds, &outcome.grid);
    let mm = fold_markers(&outcome.modified.folds, &outcome.grid);
    for (i, t) in outcome.grid.times().enumerate() {
        out.write_record([
            fmt_float(t),
            fmt_float(outcome.signal.evaluate(t)),
            fmt_float(outcome.generalized.output[i]),
            fmt_float(outcome.modified.output[i]),
            format!("{}", mg[i] as i64),
            format!("{}", mm[i] as i64),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn encode_svg(outcome: &EncodeOutcome) -> String {
    let t: Vec<f64> = outcome.grid.times().collect();
    let g: Vec<f64> = t.iter().map(|&t| outcome.signal.evaluate(t)).collect();
    line_plot(
        &format!(
            "Encoders: max |generalized| = {:.4}, max |modified| = {:.4}",
            outcome.max_abs_generalized(),
            outcome.max_abs_modified()
        ),
        "t [s]",
        &[
            Series {
                label: "g",
                color: "#999999",
                x: &t,
                y: &g,
                markers: false,
            },
            Series {
                label: "generalized",
                color: "#1f77b4",
                x: &t,
                y: &outcome.generalized.output,
                markers: false,
            },
            Series {
                label: "modified",
                color: "#d62728",
                x: &t,
                y: &outcome.modified.output,
                markers: false,
            },
        ],
    )
}

// ---------------------------------------------------------------- sweep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub lambda: f64,
    pub period: f64,
    pub omega: f64,
    pub k: usize,
    pub alpha_values: Vec<f64>,
    pub h_values: Vec<f64>,
    pub n_trials: usize,
    pub peak: f64,
    pub mse_threshold: f64,
    pub base_seed: u64,
    pub solver: SolverKind,
    pub solver_config: SolverConfig,
}

impl Default for SweepConfig {
    /// alpha in [0, 0.07], h in [0, 0.1], 50 trials per cell; the solver
    /// tolerance still has to be calibrated with [`default_tolerance`].
    fn default() -> Self {
        Self {
            lambda: 0.1,
            period: 0.0208,
            omega: 6.3,
            k: 48,
            alpha_values: linspace(0.0, 0.07, 8).expect("static grid"),
            h_values: linspace(0.0, 0.1, 6).expect("static grid"),
            n_trials: 50,
            peak: 0.4,
            mse_threshold: 1e-3,
            base_seed: 1,
            solver: SolverKind::Saomp,
            solver_config: SolverConfig::default(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alpha_values.is_empty() || self.h_values.is_empty() {
            return Err(invalid("alpha and h grids must be non-empty"));
        }
        if self.n_trials == 0 {
            return Err(invalid("a sweep needs at least one trial per cell"));
        }
        if !(self.mse_threshold > 0.0) {
            return Err(invalid(format!(
                "mse threshold must be positive, got {}",
                self.mse_threshold
            )));
        }
        self.solver_config.validate()?;
        for &alpha in &self.alpha_values {
            for &h in &self.h_values {
                HysteresisParams::new(self.lambda, h, alpha, 0.0)?;
            }
        }
        Ok(())
    }

    fn trial(&self, alpha: f64, h: f64, index: usize) -> TrialSpec {
        TrialSpec {
            omega: self.omega,
            k: self.k,
            period: self.period,
            params: HysteresisParams {
                lambda: self.lambda,
                h,
                alpha,
                tau0: -(self.k as f64) * self.period,
            },
            peak: self.peak,
            seed: self.base_seed.wrapping_add(index as u64),
            solver: self.solver,
            config: self.solver_config,
            points_per_sample: POINTS_PER_SAMPLE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepCell {
    pub alpha: f64,
    pub h: f64,
    /// Trials with MSE above the threshold, or whose encoding ran away.
    pub failures: usize,
    pub trials: usize,
    /// Mean MSE over trials that produced a reconstruction.
    pub mean_mse: f64,
    pub inadmissible_count: usize,
}

struct TrialSummary {
    mse: Option<f64>,
    admissible: bool,
}

fn summarize(spec: &TrialSpec) -> TrialSummary {
    match end_to_end_trial(spec) {
        Ok(o) => TrialSummary {
            mse: Some(o.mse()),
            admissible: o.admissibility.is_admissible(),
        },
        // Runaway encodings only happen for inadmissible parameters.
        Err(_) => TrialSummary {
            mse: None,
            admissible: false,
        },
    }
}

/// Runs every `(alpha, h)` cell on a pool of `workers` threads. Cells are
/// returned with `h` varying fastest; the result does not depend on `workers`.
pub fn run_sweep(config: &SweepConfig, workers: usize) -> Result<Vec<SweepCell>> {
    config.validate()?;
    let cells: Vec<(f64, f64)> = config
        .alpha_values
        .iter()
        .flat_map(|&a| config.h_values.iter().map(move |&h| (a, h)))
        .collect();
    let jobs: Vec<TrialSpec> = cells
        .iter()
        .flat_map(|&(a, h)| (0..config.n_trials).map(move |i| config.trial(a, h, i)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
    let summaries: Vec<TrialSummary> = pool.install(|| jobs.par_iter().map(summarize).collect());

    Ok(cells
        .iter()
        .zip(summaries.chunks(config.n_trials))
        .map(|(&(alpha, h), chunk)| {
            let completed: Vec<f64> = chunk.iter().filter_map(|s| s.mse).collect();
            let failures = chunk
                .iter()
                .filter(|s| s.mse.is_none_or(|m| !(m <= config.mse_threshold)))
                .count();
            let mean_mse = if completed.is_empty() {
                f64::NAN
            } else {
                completed.iter().sum::<f64>() / completed.len() as f64
            };
            SweepCell {
                alpha,
                h,
                failures,
                trials: chunk.len(),
                mean_mse,
                inadmissible_count: chunk.iter().filter(|s| !s.admissible).count(),
            }
        })
        .collect())
}

/// Columns `alpha, h, failures, trials, mean_mse, inadmissible_count`.
pub fn write_sweep_csv<W: Write>(cells: &[SweepCell], w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record([
        "alpha",
        "h",
        "failures",
        "trials",
        "mean_mse",
        "inadmissible_count",
    ])?;
    for c in cells {
        out.write_record([
            fmt_float(c.alpha),
            fmt_float(c.h),
            c.failures.to_string(),
            c.trials.to_string(),
            fmt_float(c.mean_mse),
            c.inadmissible_count.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Failure counts with `alpha` along the horizontal axis and `h` vertically.
pub fn sweep_svg(config: &SweepConfig, cells: &[SweepCell]) -> String {
    let n_h = config.h_values.len();
    let values: Vec<Vec<f64>> = (0..n_h)
        .map(|hi| {
            (0..config.alpha_values.len())
                .map(|ai| cells[ai * n_h + hi].failures as f64)
                .collect()
        })
        .collect();
    heat_map(
        &format!(
            "Failures (MSE > {:e}) out of {} trials",
            config.mse_threshold, config.n_trials
        ),
        "alpha [s]",
        &config.alpha_values,
        "h",
        &config.h_values,
        &values,
        config.n_trials as f64,
    )
}
