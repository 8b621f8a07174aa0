//! Property tests for the spec-level invariants: shift invariance of the
//! normalized spectrum, monotonicity and range of the distributions, ratio
//! symmetry of r, and agreement of the two coupling-error parameterizations.

use proptest::prelude::*;

use normeig::ensemble::{sample_matrix, spectrum, trial_rng, CouplingParams, RawParams};
use normeig::factorization::{coupling_error_rank, coupling_error_threshold};
use normeig::theory::{r_value, TheoryModel};

fn sampled_params(n: usize) -> RawParams {
    RawParams::new(1.0 / n as f64, 0.5 / (n as f64).sqrt(), n).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalized_spectrum_is_shift_invariant(
        n in 3usize..14,
        trial in 0u32..1000,
        shift in -25.0f64..25.0,
    ) {
        let matrix = sample_matrix(&sampled_params(n), &mut trial_rng(77, 0, trial));
        let base = spectrum(&matrix).unwrap().normalize().unwrap();
        let shifted = spectrum(&matrix.shifted(shift)).unwrap().normalize().unwrap();
        for (a, b) in base.values().iter().zip(shifted.values()) {
            prop_assert!((a - b).abs() <= 1e-9, "shift changed lambda_hat: {a} vs {b}");
        }
    }

    #[test]
    fn cdfs_are_monotone_and_bounded(
        n in 3usize..800,
        ratio in 0.01f64..20.0,
        step in 1usize..40,
    ) {
        let model = TheoryModel::new(CouplingParams::new(1.0, ratio, n).unwrap());
        let mut prev_f = 0.0;
        let mut prev_a = 0.0;
        let mut x = 0.0;
        while x <= 1.0 {
            let f = model.cdf_finite(x);
            let a = model.cdf_asymptotic(x);
            prop_assert!((0.0..=1.0).contains(&f));
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!(f >= prev_f - 1e-12);
            prop_assert!(a >= prev_a - 1e-12);
            prev_f = f;
            prev_a = a;
            x += step as f64 / 1000.0;
        }
        prop_assert_eq!(model.cdf_finite(1.0), 1.0);
    }

    #[test]
    fn r_is_ratio_symmetric(ratio in 1e-3f64..1e3) {
        let a = r_value(1.0, ratio).unwrap();
        let b = r_value(ratio, 1.0).unwrap();
        prop_assert!((a - b).abs() <= 1e-15 * a.max(b));
        prop_assert!(a > 0.0 && a <= 1.0);
    }

    #[test]
    fn threshold_matches_rank_parameterization(
        n in 3usize..20,
        trial in 0u32..500,
        alpha in 0.0f64..=1.0,
    ) {
        let params = CouplingParams::new(1.0, 0.5, n).unwrap();
        let matrix = sample_matrix(&params.raw_params(), &mut trial_rng(88, 0, trial));
        let spec = spectrum(&matrix).unwrap();
        let report = coupling_error_threshold(&spec, alpha, &params).unwrap();
        let by_rank = coupling_error_rank(&spec, report.kept_count).unwrap();
        let scale = by_rank.abs().max(1e-30);
        prop_assert!((report.raw_error - by_rank).abs() <= 1e-12 * scale);
    }

    #[test]
    fn coupling_error_theory_is_nondecreasing(
        n in 3usize..800,
        ratio in 0.01f64..20.0,
    ) {
        let model = TheoryModel::new(CouplingParams::new(1.0, ratio, n).unwrap());
        let mut prev = -1.0;
        for i in 0..=200 {
            let alpha = i as f64 / 200.0;
            let v = model.coupling_error_finite(alpha).unwrap();
            prop_assert!(v >= prev - 1e-12);
            prev = v;
        }
    }
}
