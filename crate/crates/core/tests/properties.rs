use modhys_core::encoder::{
    build_fold_signal, encode_generalized, encode_modified, HysteresisParams, TimeGrid,
};
use modhys_core::selftest::{dft_oracle, random_sparse_instance};
use modhys_core::signal::generate_random_pw;
use modhys_core::sparse::{omp, saomp, SolverConfig};
use modhys_core::spectral::{anti_difference, dft, forward_difference};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn running_sum_undoes_difference(z in prop::collection::vec(-1e3f64..1e3, 2..200)) {
        let rebuilt = anti_difference(&forward_difference(&z).unwrap());
        prop_assert_eq!(rebuilt.len(), z.len());
        for (r, v) in rebuilt.iter().zip(&z) {
            prop_assert!((r - (v - z[0])).abs() <= 1e-9 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn running_sum_is_exact_on_dyadic_data(z in prop::collection::vec(-4096i32..4096, 2..200)) {
        let z: Vec<f64> = z.into_iter().map(|v| v as f64 / 128.0).collect();
        let rebuilt = anti_difference(&forward_difference(&z).unwrap());
        for (r, v) in rebuilt.iter().zip(&z) {
            prop_assert_eq!(*r, v - z[0]);
        }
    }

    #[test]
    fn dft_matches_oracle_and_parseval(
        n in prop::sample::select(vec![4usize, 17, 96]),
        seed in any::<u64>(),
    ) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let fast = dft(&z);
        let slow = dft_oracle(&z);
        let scale = slow.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (a, b) in fast.iter().zip(&slow) {
            prop_assert!((a - b).norm() <= 1e-9 * scale);
        }
        let time: f64 = z.iter().map(|v| v.norm_sqr()).sum();
        let freq = fast.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
        prop_assert!((time - freq).abs() <= 1e-9 * time);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn modified_output_stays_in_range(
        lambda in 0.1f64..0.3,
        h_frac in 0.0f64..0.99,
        alpha in prop::sample::select(vec![0.0, 0.02, 0.1, 0.3]),
        peak in 0.2f64..1.0,
        seed in 1u64..10_000,
    ) {
        let end = 48.0 * 0.0208;
        let params = HysteresisParams::new(lambda, h_frac * lambda, alpha, -end).unwrap();
        let g = generate_random_pw(6.3, 48, 0.0208, peak, seed).unwrap();
        // The range holds for signals that start inside it.
        prop_assume!(g.evaluate(-end).abs() < lambda);
        let grid = TimeGrid::spanning(-end, end, 4001).unwrap();
        let trace = encode_modified(&g, &params, &grid).unwrap();
        prop_assert!(trace.max_abs_output() <= lambda + 1e-6);
        for w in trace.folds.windows(2) {
            prop_assert!(w[0].time <= w[1].time);
        }
    }

    #[test]
    fn output_plus_fold_signal_is_the_input(
        alpha in prop::sample::select(vec![0.0, 0.05, 0.3]),
        peak in 0.2f64..0.8,
        seed in 1u64..10_000,
    ) {
        let end = 48.0 * 0.0208;
        let params = HysteresisParams::new(0.2, 0.1, alpha, -end).unwrap();
        let g = generate_random_pw(6.3, 48, 0.0208, peak, seed).unwrap();
        let grid = TimeGrid::spanning(-end, end, 4001).unwrap();
        for trace in [
            encode_modified(&g, &params, &grid).unwrap(),
            encode_generalized(&g, &params, &grid).unwrap(),
        ] {
            let folds = build_fold_signal(&trace.folds, &params, &grid);
            for ((t, out), f) in grid.times().zip(&trace.output).zip(folds) {
                prop_assert!((out + f - g.evaluate(t)).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn omp_residual_is_monotone_and_orthogonal(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_sparse_instance(6.3, 48, 0.0208, 6, &mut rng).unwrap();
        // Perturb so the fit is not exact.
        let noise = inst.s.map(|v| v * Complex64::new(1.0, 0.01));
        let r = omp(&inst.v, &noise, 1e-9).unwrap();
        for w in r.residual_norms.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
        let residual = &noise - &inst.v * &r.c;
        for &j in &r.support {
            let corr = inst.v.column(j).dotc(&residual);
            prop_assert!(corr.norm() <= 1e-8 * (1.0 + noise.norm()));
        }
    }

    #[test]
    fn unpruned_saomp_residual_is_orthogonal(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_sparse_instance(6.3, 48, 0.0208, 6, &mut rng).unwrap();
        let config = SolverConfig { eps: 1e-9, nu: 0.7, mu: 0.0, i_max: 40 };
        let r = saomp(&inst.v, &inst.s, &config).unwrap();
        let residual = &inst.s - &inst.v * &r.c;
        for &j in &r.support {
            prop_assert!(inst.v.column(j).dotc(&residual).norm() <= 1e-8);
        }
    }
}

#[test]
fn omp_exact_recovery_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let exact = (0..200)
        .filter(|_| {
            let inst = random_sparse_instance(6.3, 48, 0.0208, 6, &mut rng).unwrap();
            let r = omp(&inst.v, &inst.s, 1e-9).unwrap();
            let err = (&r.c - &inst.c0)
                .iter()
                .map(|v| v.norm())
                .fold(0.0, f64::max);
            r.support == inst.support && err < 1e-8
        })
        .count();
    assert!(exact >= 190, "{exact}/200");
}
