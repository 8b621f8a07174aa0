//! Seeded Monte Carlo checks of the ensemble against the expected extreme
//! eigenvalues, and of the trial-to-trial spread of the coupling error.

use normeig::ensemble::{
    expected_extremes, sample_matrix, spectrum, trial_rng, CouplingParams,
};
use normeig::experiments::{
    run_coupling_experiment, CouplingSweep, ExperimentConfig, Tolerances,
};

#[test]
fn extreme_eigenvalues_match_expectations_at_n_500() {
    let params = CouplingParams::new(1.0, 0.3, 500).unwrap();
    let expected = expected_extremes(&params);

    let trials = 20;
    let mut mean_largest = 0.0;
    let mut mean_smallest = 0.0;
    for trial in 0..trials {
        let matrix = sample_matrix(&params.raw_params(), &mut trial_rng(7, 0, trial));
        let spec = spectrum(&matrix).unwrap();
        mean_largest += spec.largest();
        mean_smallest += spec.smallest();
    }
    mean_largest /= trials as f64;
    mean_smallest /= trials as f64;

    let rel_largest = (mean_largest - expected.largest).abs() / expected.largest;
    assert!(
        rel_largest <= 0.05,
        "mean largest eigenvalue {mean_largest:.4} departs from {:.4} by {rel_largest:.3}",
        expected.largest
    );
    let rel_smallest = (mean_smallest - expected.smallest).abs() / expected.smallest.abs();
    assert!(
        rel_smallest <= 0.10,
        "mean smallest eigenvalue {mean_smallest:.4} departs from {:.4} by {rel_smallest:.3}",
        expected.smallest
    );
}

#[test]
fn coupling_error_band_shrinks_with_dimension() {
    // sigma scales as 1/sqrt(n), so the trial-to-trial spread of the
    // normalized error must drop as the dimension grows.
    let cfg = ExperimentConfig {
        master_seed: 13,
        trials: 20,
        n_values: vec![10, 500],
        j0_values: vec![1.0],
        coupling_sweep: CouplingSweep::Disorders(vec![0.3]),
        grid_step: 0.05,
        output_dir: None,
        tolerances: Tolerances::default(),
    };
    let out = run_coupling_experiment(&cfg).unwrap();
    let std_at_half = |n: usize| {
        let set = out
            .sets
            .iter()
            .find(|s| s.params.n() == n)
            .expect("configured dimension");
        let idx = set
            .curve
            .alphas
            .iter()
            .position(|&a| (a - 0.5).abs() < 1e-12)
            .expect("alpha 0.5 on the grid");
        set.curve.std[idx]
    };
    let small = std_at_half(10);
    let large = std_at_half(500);
    assert!(
        large < small,
        "std at alpha=0.5 should shrink with n: n=10 gives {small:.4}, n=500 gives {large:.4}"
    );
}
