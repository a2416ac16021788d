//! Quick invariant checks across all modules, used by `modhys selftest`.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::encoder::{encode_modified, verify_return, verify_separation, TimeGrid};
use crate::error::Result;
use crate::experiments::{default_tolerance, EncodeSpec};
use crate::pipeline::{end_to_end_trial, mse, reconstruct, TrialSpec};
use crate::signal::{check_admissibility, generate_random_pw, sample_times};
use crate::sparse::{omp, SolverConfig, SolverKind};
use crate::spectral::{
    anti_difference, band_layout, build_vandermonde, dft, forward_difference, set_rhs_sign_fault,
};

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelfTestReport {
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

/// A sparse instance `s = V c0` on the default layout.
#[derive(Debug, Clone)]
pub struct SparseInstance {
    pub v: DMatrix<Complex64>,
    pub c0: DVector<Complex64>,
    pub s: DVector<Complex64>,
    /// Ascending.
    pub support: Vec<usize>,
}

/// Random 1 to `max_sparsity` sparse vector with support in `0..=M-2` and
/// magnitudes in `[0.1, 1]`, measured through the `M x N` dictionary of
/// `N = 2K` differences.
pub fn random_sparse_instance(
    omega: f64,
    k: usize,
    period: f64,
    max_sparsity: usize,
    rng: &mut impl Rng,
) -> Result<SparseInstance> {
    let layout = band_layout(omega, 2 * k, period)?;
    let v = build_vandermonde(&layout);
    let sparsity = rng.random_range(1..=max_sparsity.max(1));
    let mut support = sample(rng, layout.m - 1, sparsity).into_vec();
    support.sort_unstable();
    let mut c0 = DVector::from_element(layout.n, Complex64::new(0.0, 0.0));
    for &j in &support {
        let magnitude = rng.random_range(0.1..=1.0);
        let phase = rng.random_range(0.0..2.0 * PI);
        c0[j] = Complex64::from_polar(magnitude, phase);
    }
    let s = &v * &c0;
    Ok(SparseInstance { v, c0, s, support })
}

/// Textbook DFT without index reduction, for comparison.
pub fn dft_oracle(z: &[Complex64]) -> Vec<Complex64> {
    let n = z.len() as f64;
    (0..z.len())
        .map(|m| {
            z.iter()
                .enumerate()
                .map(|(j, v)| v * Complex64::from_polar(1.0, -2.0 * PI * (m * j) as f64 / n))
                .sum()
        })
        .collect()
}

fn check(name: &str, f: impl FnOnce() -> Result<(bool, String)>) -> CheckResult {
    let start = Instant::now();
    let (passed, detail) = match f() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    CheckResult {
        name: name.to_string(),
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn range_check() -> Result<(bool, String)> {
    let spec = EncodeSpec::default();
    let lambda = spec.params.lambda;
    let end = spec.k as f64 * spec.period;
    let grid = TimeGrid::spanning(-end, end, spec.grid_points)?;
    let mut worst: f64 = 0.0;
    let mut worst_fold: f64 = 0.0;
    for seed in 1..=20 {
        let g = generate_random_pw(spec.omega, spec.k, spec.period, spec.peak, seed)?;
        let trace = encode_modified(&g, &spec.params, &grid)?;
        worst = worst.max(trace.max_abs_output());
        for f in &trace.folds {
            worst_fold = worst_fold.max((trace.output_at(&g, f.time).abs() - lambda).abs());
        }
    }
    Ok((
        worst <= lambda + 1e-6 && worst_fold <= 1e-6,
        format!("max |output| = {worst:.9}, worst fold value error = {worst_fold:.2e}"),
    ))
}

fn separation_return_check() -> Result<(bool, String)> {
    let base = TrialSpec::default();
    let p = base.params;
    let end = base.k as f64 * base.period;
    let grid = TimeGrid::new(
        p.tau0,
        base.period / 20.0,
        ((end + 3.0 * p.alpha - p.tau0) / (base.period / 20.0)) as usize,
    )?;
    let (mut found, mut ok) = (0, 0);
    for seed in 1..=400 {
        if found == 10 {
            break;
        }
        let g = generate_random_pw(base.omega, base.k, base.period, base.peak, seed)?;
        if !check_admissibility(&g, &p, base.omega, base.k, base.period).is_admissible() {
            continue;
        }
        found += 1;
        let trace = encode_modified(&g, &p, &grid)?;
        if verify_separation(&trace, &p) && verify_return(&trace, &g, &p, 1e-6) {
            ok += 1;
        }
    }
    Ok((
        found > 0 && ok == found,
        format!("{ok}/{found} admissible signals"),
    ))
}

fn dft_check() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for n in [4usize, 17, 96] {
        let z: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let fast = dft(&z);
        let slow = dft_oracle(&z);
        let scale = slow.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let err = fast
            .iter()
            .zip(&slow)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        worst = worst.max(err / scale);
        let time: f64 = z.iter().map(|v| v.norm_sqr()).sum();
        let freq: f64 = fast.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
        worst = worst.max((time - freq).abs() / time);
    }
    Ok((worst < 1e-9, format!("worst relative error {worst:.2e}")))
}

fn difference_identity_check() -> Result<(bool, String)> {
    // Dyadic values keep every partial sum exact.
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let z: Vec<f64> = (0..97)
        .map(|_| rng.random_range(-1024i32..1024) as f64 / 64.0)
        .collect();
    let rebuilt = anti_difference(&forward_difference(&z)?);
    let exact = rebuilt.iter().zip(&z).all(|(r, v)| *r == v - z[0]);
    Ok((exact, format!("{} samples", z.len())))
}

fn omp_recovery_check() -> Result<(bool, String)> {
    let base = TrialSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let trials = 50;
    let mut ok = 0;
    for _ in 0..trials {
        let inst = random_sparse_instance(base.omega, base.k, base.period, 6, &mut rng)?;
        let r = omp(&inst.v, &inst.s, 1e-9)?;
        let err = (&r.c - &inst.c0)
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        if r.support == inst.support && err < 1e-8 {
            ok += 1;
        }
    }
    Ok((ok * 100 >= 95 * trials, format!("{ok}/{trials} exact")))
}

fn neutrality_check(eps: f64) -> Result<(bool, String)> {
    let mut spec = TrialSpec {
        peak: 0.09,
        ..TrialSpec::default()
    };
    spec.config.eps = eps;
    let mut worst: f64 = 0.0;
    for seed in 1..=10 {
        spec.seed = seed;
        let o = end_to_end_trial(&spec)?;
        worst = worst.max(o.mse());
    }
    Ok((worst < 1e-10, format!("worst MSE {worst:.2e}")))
}

fn single_fold_check(eps: f64) -> Result<(bool, String)> {
    let base = TrialSpec::default();
    let g = generate_random_pw(base.omega, base.k, base.period, 0.08, 21)?;
    let truth = g.sample(&sample_times(base.k, base.period));
    let n0 = 40;
    let folded: Vec<f64> = truth
        .iter()
        .enumerate()
        .map(|(n, v)| if n >= n0 { v - 0.15 } else { *v })
        .collect();
    let config = SolverConfig {
        eps,
        ..SolverConfig::default()
    };
    let report = reconstruct(&folded, base.omega, base.period, SolverKind::Omp, &config)?;
    let err = mse(&report.recovered_samples, &truth)?;
    let active = report.active_indices(0.01);
    Ok((
        active == vec![n0 - 1] && err < 1e-8,
        format!("support {active:?}, MSE {err:.2e}"),
    ))
}

/// Runs every check. With `inject_fault` the right-hand side sign is flipped
/// for the duration, which the reconstruction checks must catch.
pub fn run_selftest(inject_fault: bool) -> SelfTestReport {
    set_rhs_sign_fault(inject_fault);
    let base = TrialSpec::default();
    let eps = default_tolerance(base.omega, base.k, base.period, base.params.lambda);
    let mut checks = vec![
        check("encoder range and fold values", range_check),
        check("fold separation and return", separation_return_check),
        check("DFT oracle and Parseval", dft_check),
        check(
            "difference / running-sum identity",
            difference_identity_check,
        ),
        check("OMP exact recovery", omp_recovery_check),
    ];
    match eps {
        Ok(eps) => {
            checks.push(check("no-fold neutrality", || neutrality_check(eps)));
            checks.push(check("single fold reconstruction", || {
                single_fold_check(eps)
            }));
        }
        Err(e) => checks.push(CheckResult {
            name: "tolerance calibration".into(),
            passed: false,
            detail: e.to_string(),
            seconds: 0.0,
        }),
    }
    set_rhs_sign_fault(false);
    let passed = checks.iter().all(|c| c.passed);
    SelfTestReport { checks, passed }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_instances_respect_the_spec() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let inst = random_sparse_instance(6.3, 48, 0.0208, 6, &mut rng).unwrap();
            assert!((1..=6).contains(&inst.support.len()));
            assert!(inst.support.iter().all(|&j| j <= 87));
            assert!(inst
                .support
                .iter()
                .all(|&j| inst.c0[j].norm() >= 0.1 - 1e-15));
            assert_eq!(inst.s.len(), 89);
        }
    }

    #[test]
    fn oracle_matches_on_an_impulse() {
        let mut z = vec![Complex64::new(0.0, 0.0); 8];
        z[1] = Complex64::new(1.0, 0.0);
        let out = dft_oracle(&z);
        assert!((out[2] - Complex64::from_polar(1.0, -PI / 2.0)).norm() < 1e-15);
    }
}
