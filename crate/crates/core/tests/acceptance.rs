//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use modhys_core::encoder::{
    encode_generalized, encode_modified, verify_return, verify_separation, HysteresisParams,
    TimeGrid,
};
use modhys_core::experiments::{
    default_tolerance, fmt_float, run_sweep, write_sweep_csv, SweepConfig,
};
use modhys_core::pipeline::{end_to_end_trial, TrialSpec};
use modhys_core::selftest::{dft_oracle, random_sparse_instance};
use modhys_core::signal::{check_admissibility, generate_random_pw};
use modhys_core::sparse::{omp, saomp, SolverConfig};
use modhys_core::spectral::{anti_difference, dft, forward_difference};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Criterion = (&'static str, Duration, Box<dyn Fn() -> Outcome>);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn ramped_params() -> HysteresisParams {
    HysteresisParams::new(0.2, 0.1, 0.3, -48.0 * 0.0208).unwrap()
}

fn ramped_grid() -> TimeGrid {
    let end = 48.0 * 0.0208;
    TimeGrid::spanning(-end, end, 10_000).unwrap()
}

fn range_invariant() -> Outcome {
    let params = ramped_params();
    let grid = ramped_grid();
    let mut worst: f64 = 0.0;
    for seed in 1..=100 {
        let g = generate_random_pw(6.3, 48, 0.0208, 0.6, seed).unwrap();
        worst = worst.max(
            encode_modified(&g, &params, &grid)
                .unwrap()
                .max_abs_output(),
        );
    }
    outcome(
        worst <= 0.2 + 1e-6,
        format!("max |output| over 100 signals = {worst:.12}"),
    )
}

fn generalized_excursion() -> Outcome {
    let params = ramped_params();
    let grid = ramped_grid();
    let seeds: Vec<u64> = (1..=20)
        .filter(|&seed| {
            let g = generate_random_pw(6.3, 48, 0.0208, 0.6, seed).unwrap();
            encode_generalized(&g, &params, &grid)
                .unwrap()
                .max_abs_output()
                > 0.2
        })
        .collect();
    outcome(
        !seeds.is_empty(),
        format!(
            "{} of 20 seeds leave the range, first {:?}",
            seeds.len(),
            seeds.first()
        ),
    )
}

fn fold_values() -> Outcome {
    let params = ramped_params();
    let grid = ramped_grid();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for seed in 1..=100 {
        let g = generate_random_pw(6.3, 48, 0.0208, 0.6, seed).unwrap();
        let trace = encode_modified(&g, &params, &grid).unwrap();
        for f in trace.folds.iter().filter(|f| f.time > grid.start) {
            worst = worst.max((trace.output_at(&g, f.time).abs() - 0.2).abs());
            count += 1;
        }
    }
    // Instantaneous transient: the value right after a fold is lambda - h.
    let instant = HysteresisParams::new(0.2, 0.1, 0.0, -48.0 * 0.0208).unwrap();
    let mut worst_instant: f64 = 0.0;
    let mut count_instant = 0;
    for seed in 1..=100 {
        let g = generate_random_pw(6.3, 48, 0.0208, 0.6, seed).unwrap();
        let trace = encode_modified(&g, &instant, &grid).unwrap();
        for f in trace.folds.iter().filter(|f| f.time > grid.start) {
            worst_instant = worst_instant.max((trace.output_at(&g, f.time).abs() - 0.1).abs());
            count_instant += 1;
        }
    }
    outcome(
        count > 0 && count_instant > 0 && worst <= 1e-6 && worst_instant <= 1e-6,
        format!(
            "ramped: {count} folds, worst |out| - lambda = {worst:.2e}; instantaneous: {count_instant} folds, worst = {worst_instant:.2e}"
        ),
    )
}

fn separation_and_return() -> Outcome {
    let spec = TrialSpec::default();
    let p = spec.params;
    let step = spec.period / 20.0;
    let end = spec.k as f64 * spec.period + 2.0 * p.alpha + 10.0 * spec.period;
    let grid = TimeGrid::new(p.tau0, step, ((end - p.tau0) / step).ceil() as usize + 1).unwrap();
    let (mut found, mut ok, mut seed) = (0, 0, 0);
    while found < 50 && seed < 5000 {
        seed += 1;
        let g = generate_random_pw(spec.omega, spec.k, spec.period, spec.peak, seed).unwrap();
        let adm = check_admissibility(&g, &p, spec.omega, spec.k, spec.period);
        if !(adm.decay_ok && adm.d2_ok && adm.hysteresis_ok) {
            continue;
        }
        found += 1;
        let trace = encode_modified(&g, &p, &grid).unwrap();
        if verify_separation(&trace, &p) && verify_return(&trace, &g, &p, 1e-6) {
            ok += 1;
        }
    }
    outcome(
        found == 50 && ok == found,
        format!("{ok}/{found} admissible signals (seeds 1..={seed})"),
    )
}

fn solver_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut exact = 0;
    for _ in 0..200 {
        let inst = random_sparse_instance(6.3, 48, 0.0208, 6, &mut rng).unwrap();
        let r = omp(&inst.v, &inst.s, 1e-9).unwrap();
        let err = (&r.c - &inst.c0)
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        if r.support == inst.support && err < 1e-8 {
            exact += 1;
        }
    }
    let mut same = 0;
    for _ in 0..50 {
        let inst = random_sparse_instance(6.3, 48, 0.0208, 6, &mut rng).unwrap();
        let a = omp(&inst.v, &inst.s, 1e-9).unwrap();
        let b = saomp(
            &inst.v,
            &inst.s,
            &SolverConfig::omp_equivalent(1e-9, inst.v.ncols()),
        )
        .unwrap();
        if a.trajectory == b.trajectory && a.support == b.support {
            same += 1;
        }
    }
    outcome(
        exact >= 190 && same == 50,
        format!(
            "(a) OMP exact on {exact}/200; (b) SAOMP(1, 0, N) trajectory equals OMP on {same}/50"
        ),
    )
}

fn numerical_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut dft_err, mut parseval_err): (f64, f64) = (0.0, 0.0);
    let mut identity = true;
    for n in [4usize, 17, 96] {
        let z: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let fast = dft(&z);
        let slow = dft_oracle(&z);
        let scale = slow.iter().map(|v| v.norm()).fold(0.0, f64::max);
        dft_err = dft_err.max(
            fast.iter()
                .zip(&slow)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max)
                / scale,
        );
        let time: f64 = z.iter().map(|v| v.norm_sqr()).sum();
        let freq = fast.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
        parseval_err = parseval_err.max((time - freq).abs() / time);

        let r: Vec<f64> = (0..=n)
            .map(|_| rng.random_range(-4096i32..4096) as f64 / 256.0)
            .collect();
        let rebuilt = anti_difference(&forward_difference(&r).unwrap());
        identity &= rebuilt.iter().zip(&r).all(|(a, b)| *a == b - r[0]);
    }
    outcome(
        dft_err < 1e-9 && parseval_err < 1e-9 && identity,
        format!("DFT rel err {dft_err:.2e}, Parseval rel err {parseval_err:.2e}, S(dz) = z - z[0] exact: {identity}"),
    )
}

fn demo_spec(eps: f64) -> TrialSpec {
    let mut spec = TrialSpec::default();
    spec.config.eps = eps;
    spec
}

/// First 50 admissible seeds of the demo setup and their MSE, as CSV.
fn demo_trials(eps: f64, workers: usize) -> (Vec<(u64, f64)>, Vec<u8>) {
    let spec = demo_spec(eps);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .unwrap();
    let mut accepted = Vec::new();
    let mut next = 1u64;
    while accepted.len() < 50 {
        let seeds: Vec<u64> = (next..next + 64).collect();
        next += 64;
        let results: Vec<(u64, bool, f64)> = pool.install(|| {
            seeds
                .par_iter()
                .map(|&seed| {
                    let o = end_to_end_trial(&TrialSpec { seed, ..spec }).unwrap();
                    (seed, o.admissibility.is_admissible(), o.mse())
                })
                .collect()
        });
        accepted.extend(results.into_iter().filter(|r| r.1).map(|(s, _, m)| (s, m)));
    }
    accepted.truncate(50);
    let mut csv = b"seed,mse\r\n".to_vec();
    for (s, m) in &accepted {
        csv.extend(format!("{s},{}\r\n", fmt_float(*m)).bytes());
    }
    (accepted, csv)
}

fn demo_reproduction(eps: f64) -> Outcome {
    let (trials, _) = demo_trials(eps, 4);
    let ok = trials.iter().filter(|(_, m)| *m < 1e-3).count();
    let worst = trials.iter().map(|t| t.1).fold(0.0, f64::max);
    outcome(
        ok * 100 >= 80 * trials.len(),
        format!(
            "{ok}/{} admissible seeds with MSE < 1e-3 (seeds up to {}), worst MSE {worst:.2e}",
            trials.len(),
            trials.last().map_or(0, |t| t.0)
        ),
    )
}

fn trend_config(eps: f64) -> SweepConfig {
    SweepConfig {
        alpha_values: vec![0.0, 0.02, 0.05, 0.07],
        h_values: vec![0.0, 0.03, 0.06, 0.1],
        n_trials: 20,
        solver_config: SolverConfig {
            eps,
            ..SolverConfig::default()
        },
        ..SweepConfig::default()
    }
}

fn failure_trend(eps: f64) -> Outcome {
    let config = trend_config(eps);
    let cells = run_sweep(&config, 4).unwrap();
    let failures = |ai: usize, hi: usize| cells[ai * 4 + hi].failures;
    let corner = failures(3, 0) >= failures(0, 0);
    let rows = (0..4)
        .filter(|&hi| failures(3, hi) >= failures(0, hi))
        .count();
    let table: Vec<String> = (0..4)
        .map(|hi| {
            format!(
                "h={}: {:?}",
                config.h_values[hi],
                (0..4).map(|ai| failures(ai, hi)).collect::<Vec<_>>()
            )
        })
        .collect();
    outcome(
        corner && rows >= 3,
        format!(
            "{rows}/4 rows non-decreasing from alpha 0 to 0.07; {}",
            table.join("; ")
        ),
    )
}

fn no_fold_neutrality(eps: f64) -> Outcome {
    let mut spec = demo_spec(eps);
    spec.peak = 0.09;
    let mut worst: f64 = 0.0;
    let mut folds = 0;
    for seed in 1..=50 {
        let o = end_to_end_trial(&TrialSpec { seed, ..spec }).unwrap();
        folds += o.folds.len();
        worst = worst.max(o.mse());
    }
    outcome(
        folds == 0 && worst < 1e-10,
        format!("50 trials at peak 0.09, {folds} folds, worst MSE {worst:.2e}"),
    )
}

fn determinism(eps: f64) -> Outcome {
    let (_, a) = demo_trials(eps, 1);
    let (_, b) = demo_trials(eps, 4);
    let config = trend_config(eps);
    let mut c = Vec::new();
    let mut d = Vec::new();
    write_sweep_csv(&run_sweep(&config, 1).unwrap(), &mut c).unwrap();
    write_sweep_csv(&run_sweep(&config, 4).unwrap(), &mut d).unwrap();
    outcome(
        a == b && c == d,
        format!(
            "reconstruction CSV identical: {}, sweep CSV identical: {} (1 vs 4 workers)",
            a == b,
            c == d
        ),
    )
}

fn main() -> ExitCode {
    let eps = default_tolerance(6.3, 48, 0.0208, 0.1).unwrap();
    println!("calibrated stopping tolerance eps = {eps:.6}");
    let criteria: Vec<Criterion> = vec![
        (
            "1 range invariant",
            Duration::from_secs(30),
            Box::new(range_invariant),
        ),
        (
            "2 generalized excursion",
            Duration::from_secs(10),
            Box::new(generalized_excursion),
        ),
        (
            "3 fold values",
            Duration::from_secs(60),
            Box::new(fold_values),
        ),
        (
            "4 separation and return",
            Duration::from_secs(60),
            Box::new(separation_and_return),
        ),
        (
            "5 solver correctness",
            Duration::from_secs(60),
            Box::new(solver_correctness),
        ),
        (
            "6 numerical oracles",
            Duration::from_secs(10),
            Box::new(numerical_oracles),
        ),
        (
            "7 demo setup reproduction",
            Duration::from_secs(300),
            Box::new(move || demo_reproduction(eps)),
        ),
        (
            "8 failure trend",
            Duration::from_secs(600),
            Box::new(move || failure_trend(eps)),
        ),
        (
            "9 no-fold neutrality",
            Duration::from_secs(60),
            Box::new(move || no_fold_neutrality(eps)),
        ),
        (
            "10 determinism",
            Duration::from_secs(900),
            Box::new(move || determinism(eps)),
        ),
    ];
    let mut all = true;
    for (name, budget, run) in criteria {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let passed = out.passed && elapsed <= budget;
        all &= passed;
        println!(
            "{} criterion {name}: {} [{:.2}s, limit {}s]",
            if passed { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!(
        "{}",
        if all {
            "acceptance: all criteria passed"
        } else {
            "acceptance: FAILED"
        }
    );
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
