//! `modhys`: run reconstruction demos, encoder comparisons, parameter sweeps
//! and the self-test.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use config::{parse_grid, Settings};
use modhys_core::encoder::HysteresisParams;
use modhys_core::experiments::{
    default_tolerance, demo_svg, encode_svg, run_demo, run_encode, run_sweep, sweep_svg,
    write_demo_csv, write_encode_csv, write_sweep_csv, EncodeSpec, SweepConfig,
};
use modhys_core::pipeline::TrialSpec;
use modhys_core::selftest::run_selftest;
use modhys_core::sparse::{SolverConfig, SolverKind};

#[derive(Parser)]
#[command(
    name = "modhys",
    version,
    about = "Modulo hysteresis sampling and sparse reconstruction"
)]
struct Cli {
    /// TOML file with default values for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode one random signal, reconstruct it, write demo.csv and demo.svg.
    Demo(Settings),
    /// Compare the generalized and modified encoders, write encode.csv and encode.svg.
    Encode(Settings),
    /// Count reconstruction failures over an (alpha, h) grid, write sweep.csv and sweep.svg.
    Sweep(Settings),
    /// Run the invariant checks; exits non-zero if any fails.
    Selftest {
        #[arg(long)]
        json: bool,
        /// Flip the sign of the right-hand side to check that failures are caught.
        #[arg(long = "inject-fault", hide = true)]
        inject_fault: bool,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    let file = cli.config.as_deref().map(Settings::load).transpose()?;
    match cli.command {
        Command::Demo(flags) => demo(Settings::resolve(file, "demo", &flags)),
        Command::Encode(flags) => encode(Settings::resolve(file, "encode", &flags)),
        Command::Sweep(flags) => sweep(Settings::resolve(file, "sweep", &flags)),
        Command::Selftest { json, inject_fault } => selftest(json, inject_fault),
    }
}

fn out_dir(s: &Settings) -> Result<PathBuf> {
    let dir = s.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn solver_kind(s: &Settings, default: SolverKind) -> Result<SolverKind> {
    Ok(match &s.solver {
        Some(name) => name.parse()?,
        None => default,
    })
}

/// Solver settings with the tolerance calibrated when not given.
fn solver_config(
    s: &Settings,
    omega: f64,
    k: usize,
    period: f64,
    lambda: f64,
) -> Result<SolverConfig> {
    let d = SolverConfig::default();
    let eps = match s.eps {
        Some(eps) => eps,
        None => default_tolerance(omega, k, period, lambda)?,
    };
    let config = SolverConfig {
        eps,
        nu: s.nu.unwrap_or(d.nu),
        mu: s.mu.unwrap_or(d.mu),
        i_max: s.imax.unwrap_or(d.i_max),
    };
    config.validate()?;
    Ok(config)
}

fn demo(s: Settings) -> Result<ExitCode> {
    let d = TrialSpec::default();
    let omega = s.omega.unwrap_or(d.omega);
    let k = s.k.unwrap_or(d.k);
    let period = s.period.unwrap_or(d.period);
    let params = HysteresisParams::new(
        s.lambda.unwrap_or(d.params.lambda),
        s.h.unwrap_or(d.params.h),
        s.alpha.unwrap_or(d.params.alpha),
        -(k as f64) * period,
    )?;
    let spec = TrialSpec {
        omega,
        k,
        period,
        params,
        peak: s.peak.unwrap_or(d.peak),
        seed: s.seed.unwrap_or(d.seed),
        solver: solver_kind(&s, d.solver)?,
        config: solver_config(&s, omega, k, period, params.lambda)?,
        points_per_sample: d.points_per_sample,
    };
    let outcome = run_demo(&spec)?;
    let dir = out_dir(&s)?;
    let mut csv = Vec::new();
    write_demo_csv(&outcome, &mut csv)?;
    write_file(&dir.join("demo.csv"), &csv)?;
    write_file(&dir.join("demo.svg"), demo_svg(&outcome).as_bytes())?;

    let r = &outcome.report;
    if s.json.unwrap_or(false) {
        let doc = json!({
            "spec": spec,
            "mse": outcome.mse(),
            "folds": outcome.folds.len(),
            "admissibility": outcome.admissibility,
            "admissible": outcome.admissibility.is_admissible(),
            "support": r.solver.support,
            "iterations": r.solver.iterations,
            "converged": r.solver.converged,
            "imag_residue": r.imag_residue,
        });
        println!("{}", serde_json::to_string_pretty(&doc)?);
    } else {
        println!(
            "seed {}  solver {}  eps {:.4}",
            spec.seed, spec.solver, spec.config.eps
        );
        println!(
            "folds {}  admissible {}  support {:?}",
            outcome.folds.len(),
            outcome.admissibility.is_admissible(),
            r.solver.support
        );
        if !r.oversampling_ok {
            println!("warning: T >= pi / omega, the samples do not determine g");
        }
        println!("MSE {:.6e}", outcome.mse());
        println!("wrote {}", dir.join("demo.csv").display());
    }
    Ok(ExitCode::SUCCESS)
}

fn encode(s: Settings) -> Result<ExitCode> {
    let d = EncodeSpec::default();
    let k = s.k.unwrap_or(d.k);
    let period = s.period.unwrap_or(d.period);
    let spec = EncodeSpec {
        omega: s.omega.unwrap_or(d.omega),
        k,
        period,
        params: HysteresisParams::new(
            s.lambda.unwrap_or(d.params.lambda),
            s.h.unwrap_or(d.params.h),
            s.alpha.unwrap_or(d.params.alpha),
            -(k as f64) * period,
        )?,
        peak: s.peak.unwrap_or(d.peak),
        seed: s.seed.unwrap_or(d.seed),
        grid_points: s.grid_points.unwrap_or(d.grid_points),
    };
    let outcome = run_encode(&spec)?;
    let dir = out_dir(&s)?;
    let mut csv = Vec::new();
    write_encode_csv(&outcome, &mut csv)?;
    write_file(&dir.join("encode.csv"), &csv)?;
    write_file(&dir.join("encode.svg"), encode_svg(&outcome).as_bytes())?;

    if s.json.unwrap_or(false) {
        let doc = json!({
            "spec": spec,
            "max_abs_generalized": outcome.max_abs_generalized(),
            "max_abs_modified": outcome.max_abs_modified(),
            "folds_generalized": outcome.generalized.folds.len(),
            "folds_modified": outcome.modified.folds.len(),
        });
        println!("{}", serde_json::to_string_pretty(&doc)?);
    } else {
        println!(
            "max |generalized| {:.9}  ({} folds)",
            outcome.max_abs_generalized(),
            outcome.generalized.folds.len()
        );
        println!(
            "max |modified|    {:.9}  ({} folds)",
            outcome.max_abs_modified(),
            outcome.modified.folds.len()
        );
        println!("wrote {}", dir.join("encode.csv").display());
    }
    Ok(ExitCode::SUCCESS)
}

fn sweep(s: Settings) -> Result<ExitCode> {
    let d = SweepConfig::default();
    let omega = s.omega.unwrap_or(d.omega);
    let k = s.k.unwrap_or(d.k);
    let period = s.period.unwrap_or(d.period);
    let lambda = s.lambda.unwrap_or(d.lambda);
    let config = SweepConfig {
        lambda,
        period,
        omega,
        k,
        alpha_values: match &s.alpha_grid {
            Some(g) => parse_grid(g)?,
            None => d.alpha_values.clone(),
        },
        h_values: match &s.h_grid {
            Some(g) => parse_grid(g)?,
            None => d.h_values.clone(),
        },
        n_trials: s.trials.unwrap_or(d.n_trials),
        peak: s.peak.unwrap_or(d.peak),
        mse_threshold: s.mse_threshold.unwrap_or(d.mse_threshold),
        base_seed: s.seed.unwrap_or(d.base_seed),
        solver: solver_kind(&s, d.solver)?,
        solver_config: solver_config(&s, omega, k, period, lambda)?,
    };
    let workers = s
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let cells = run_sweep(&config, workers)?;
    let dir = out_dir(&s)?;
    let mut csv = Vec::new();
    write_sweep_csv(&cells, &mut csv)?;
    write_file(&dir.join("sweep.csv"), &csv)?;
    write_file(
        &dir.join("sweep.svg"),
        sweep_svg(&config, &cells).as_bytes(),
    )?;

    if s.json.unwrap_or(false) {
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({ "config": config, "cells": cells }))?
        );
    } else {
        println!(
            "{:>8} {:>8} {:>9} {:>12} {:>12}",
            "alpha", "h", "failures", "mean MSE", "inadmissible"
        );
        for c in &cells {
            println!(
                "{:>8.4} {:>8.4} {:>4}/{:<4} {:>12.3e} {:>12}",
                c.alpha, c.h, c.failures, c.trials, c.mean_mse, c.inadmissible_count
            );
        }
        println!("wrote {}", dir.join("sweep.csv").display());
    }
    Ok(ExitCode::SUCCESS)
}

fn selftest(json: bool, inject_fault: bool) -> Result<ExitCode> {
    let report = run_selftest(inject_fault);
    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        for c in &report.checks {
            println!(
                "{:<4} {:<36} {:>7.2}s  {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.seconds,
                c.detail
            );
        }
        println!(
            "{}",
            if report.passed {
                "all checks passed"
            } else {
                "some checks failed"
            }
        );
    }
    Ok(if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
