//! Seeded Monte Carlo experiments comparing sampled spectra against the
//! closed-form theory.
//!
//! Three harnesses mirror the three figures of the study: the scaling of the
//! normalized-eigenvalue distribution in `j1/j0`, its convergence in `n`, and
//! the coupling error as a function of the truncation threshold `alpha`.
//! Every trial draws its RNG stream from `(master_seed, set_index,
//! trial_index)`, so runs are reproducible and trials can execute in
//! parallel; aggregation happens in trial order, never completion order.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{sample_matrix, spectrum, trial_rng, CouplingParams};
use crate::error::{is_positive_finite, Error, Result};
use crate::factorization::coupling_error_threshold;
use crate::theory::{Regime, TheoryModel};

/// Master seed used by the reference experiment configurations when the
/// caller does not supply one.
pub const DEFAULT_MASTER_SEED: u64 = 1;

/// Second sweep axis of a parameter scan: either disorder-to-mean ratios
/// (`j1 = ratio * j0`) or explicit disorder scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CouplingSweep {
    Ratios(Vec<f64>),
    Disorders(Vec<f64>),
}

impl CouplingSweep {
    fn values(&self) -> &[f64] {
        match self {
            CouplingSweep::Ratios(v) | CouplingSweep::Disorders(v) => v,
        }
    }

    fn j1_for(&self, index: usize, j0: f64) -> f64 {
        match self {
            CouplingSweep::Ratios(v) => v[index] * j0,
            CouplingSweep::Disorders(v) => v[index],
        }
    }

    fn is_ratios(&self) -> bool {
        matches!(self, CouplingSweep::Ratios(_))
    }
}

/// Comparison tolerances for the pass/fail records in [`RunSummary`].
///
/// The defaults reflect the statistical noise at the reference sample sizes
/// (10 or 20 trials at n up to 500) plus the finite-size error of the
/// expected-extremes approximation; they can be overridden per run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Sup deviation of a pooled ECDF from the finite-size distribution.
    pub cdf_sup: f64,
    /// Sup difference between pooled ECDFs at equal ratio, different `j0`.
    pub pairwise_sup: f64,
    /// Sup deviation from the asymptotic distribution at the largest `n`.
    pub convergence_sup: f64,
    /// Relative deviation of the mean coupling-error curve on [0.05, 0.95].
    pub coupling_rel: f64,
    /// Relative deviation of the plateau level from `5 (n-2) / n`.
    pub plateau_rel: f64,
    /// Absolute deviation of the detected plateau onset from `r`.
    pub plateau_onset: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            cdf_sup: 0.06,
            pairwise_sup: 0.06,
            convergence_sup: 0.03,
            coupling_rel: 0.05,
            plateau_rel: 0.02,
            plateau_onset: 0.1,
        }
    }
}

/// Fully seeded description of one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub trials: usize,
    pub n_values: Vec<usize>,
    pub j0_values: Vec<f64>,
    pub coupling_sweep: CouplingSweep,
    /// Grid resolution for both the comparison grid and the alpha grid.
    pub grid_step: f64,
    /// Directory for CSV/JSON artifacts; `None` keeps the run in memory.
    pub output_dir: Option<PathBuf>,
    pub tolerances: Tolerances,
}

impl ExperimentConfig {
    /// Defaults reproducing the scaling figure: `n = 100`, ratios
    /// {0.1, 0.3, 10.0} swept across `j0` in {0.1, 1.0, 10.0}, 10 trials.
    pub fn cdf_scaling_defaults(master_seed: u64) -> Self {
        Self {
            master_seed,
            trials: 10,
            n_values: vec![100],
            j0_values: vec![0.1, 1.0, 10.0],
            coupling_sweep: CouplingSweep::Ratios(vec![0.1, 0.3, 10.0]),
            grid_step: 0.01,
            output_dir: None,
            tolerances: Tolerances::default(),
        }
    }

    /// Defaults reproducing the convergence figure: `j0 = 1`, `j1 = 0.3`,
    /// `n` in {10, 25, 100, 500}, 10 trials.
    pub fn cdf_convergence_defaults(master_seed: u64) -> Self {
        Self {
            master_seed,
            trials: 10,
            n_values: vec![10, 25, 100, 500],
            j0_values: vec![1.0],
            coupling_sweep: CouplingSweep::Ratios(vec![0.3]),
            grid_step: 0.01,
            output_dir: None,
            tolerances: Tolerances::default(),
        }
    }

    /// Defaults reproducing the coupling-error figures: `j0 = 1`, `j1` in
    /// {0.1, 0.3, 10.0}, `n` in {10, 50, 100, 500}, 20 trials.
    pub fn coupling_defaults(master_seed: u64) -> Self {
        Self {
            master_seed,
            trials: 20,
            n_values: vec![10, 50, 100, 500],
            j0_values: vec![1.0],
            coupling_sweep: CouplingSweep::Disorders(vec![0.1, 0.3, 10.0]),
            grid_step: 0.01,
            output_dir: None,
            tolerances: Tolerances::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.n_values.is_empty() || self.j0_values.is_empty() || self.coupling_sweep.values().is_empty()
        {
            return Err(Error::InvalidConfig(
                "n, j0, and the coupling sweep must each contain at least one value".into(),
            ));
        }
        if !is_positive_finite(self.grid_step) || self.grid_step > 0.1 {
            return Err(Error::InvalidConfig(format!(
                "grid step must lie in (0, 0.1], got {}",
                self.grid_step
            )));
        }
        let cells = 1.0 / self.grid_step;
        if (cells - cells.round()).abs() > 1e-9 * cells {
            return Err(Error::InvalidConfig(format!(
                "grid step {} does not divide 1 into an integer number of cells",
                self.grid_step
            )));
        }
        for &n in &self.n_values {
            if n < crate::ensemble::MIN_DIMENSION {
                return Err(Error::InvalidConfig(format!(
                    "matrix dimension must be at least 3, got {n}"
                )));
            }
        }
        for &j0 in &self.j0_values {
            if !is_positive_finite(j0) {
                return Err(Error::InvalidConfig(format!(
                    "j0 values must be positive finite reals, got {j0}"
                )));
            }
        }
        for &v in self.coupling_sweep.values() {
            if !is_positive_finite(v) {
                return Err(Error::InvalidConfig(format!(
                    "sweep values must be positive finite reals, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Deterministic enumeration of the parameter cartesian product. The
    /// local index offset by `base` becomes the RNG set index.
    fn parameter_sets(&self, base: u32) -> Result<Vec<ParameterSet>> {
        let mut sets = Vec::new();
        let mut local = 0u32;
        for &n in &self.n_values {
            for &j0 in &self.j0_values {
                for (sweep_idx, _) in self.coupling_sweep.values().iter().enumerate() {
                    let j1 = self.coupling_sweep.j1_for(sweep_idx, j0);
                    let params = CouplingParams::new(j0, j1, n)
                        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
                    sets.push(ParameterSet {
                        set_index: base + local,
                        sweep_index: sweep_idx,
                        params,
                    });
                    local += 1;
                }
            }
        }
        Ok(sets)
    }
}

/// Disjoint RNG set-index ranges per experiment kind, so identical parameter
/// sets appearing in different experiments still draw independent matrices.
const SCALING_STREAM_BASE: u32 = 0;
const CONVERGENCE_STREAM_BASE: u32 = 1 << 16;
const COUPLING_STREAM_BASE: u32 = 2 << 16;

#[derive(Debug, Clone)]
struct ParameterSet {
    set_index: u32,
    sweep_index: usize,
    params: CouplingParams,
}

/// Empirical cumulative distribution evaluated on a fixed grid with the
/// strict-inequality convention `values[j] = #{samples < grid[j]} / count`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EcdfEstimate {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub sample_count: usize,
}

/// Builds an ECDF on `grid`, counting with strict inequality to match the
/// theoretical `P(lambda_hat < x)`.
pub fn ecdf(samples: &[f64], grid: &[f64]) -> Result<EcdfEstimate> {
    if samples.is_empty() {
        return Err(Error::Domain("cannot estimate an ECDF from zero samples".into()));
    }
    validate_grid(grid)?;
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let count = sorted.len() as f64;
    let values = grid
        .iter()
        .map(|&g| sorted.partition_point(|&s| s < g) as f64 / count)
        .collect();
    Ok(EcdfEstimate {
        grid: grid.to_vec(),
        values,
        sample_count: samples.len(),
    })
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Domain("grid must be nonempty".into()));
    }
    let upper = 1.0_f64.next_up();
    if let Some(bad) = grid.iter().find(|g| !g.is_finite()) {
        return Err(Error::Domain(format!("grid must be finite, saw {bad}")));
    }
    for pair in grid.windows(2) {
        if pair[0] >= pair[1] {
            return Err(Error::Domain(format!(
                "grid must be strictly ascending, saw {} then {}",
                pair[0], pair[1]
            )));
        }
    }
    if grid[0] < 0.0 || *grid.last().unwrap() > upper {
        return Err(Error::Domain("grid must lie within [0, 1]".into()));
    }
    Ok(())
}

/// Largest absolute gap between the estimate and a reference CDF on the grid.
pub fn sup_deviation(estimate: &EcdfEstimate, theory: impl Fn(f64) -> f64) -> f64 {
    estimate
        .grid
        .iter()
        .zip(&estimate.values)
        .map(|(&x, &v)| (v - theory(x)).abs())
        .fold(0.0, f64::max)
}

/// Comparison grid `0, h, 2h, ..., 1` plus one point just above 1 so the
/// strict-inequality ECDF reaches exactly 1 at the grid end. Points are
/// computed as `i / cells`, which lands on the closest doubles to the
/// decimal fractions.
pub fn comparison_grid(step: f64) -> Vec<f64> {
    let cells = (1.0 / step).round();
    let mut grid = Vec::with_capacity(cells as usize + 2);
    for i in 0..=(cells as usize) {
        grid.push(i as f64 / cells);
    }
    grid.push(1.0_f64.next_up());
    grid
}

/// Alpha grid `0, h, 2h, ..., 1` for the coupling-error curves.
pub fn alpha_grid(step: f64) -> Vec<f64> {
    let cells = (1.0 / step).round();
    (0..=(cells as usize)).map(|i| i as f64 / cells).collect()
}

/// Mean and standard deviation (across trials) of the normalized coupling
/// error on an alpha grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorCurve {
    pub alphas: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// One pass/fail comparison recorded in the run summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl CheckRecord {
    fn upper_bound(name: String, value: f64, threshold: f64) -> Self {
        Self {
            name,
            value,
            threshold,
            passed: value <= threshold,
        }
    }
}

/// Per-parameter-set digest for the JSON summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetSummary {
    pub label: String,
    pub set_index: u32,
    pub n: usize,
    pub j0: f64,
    pub j1: f64,
    pub ratio: f64,
    pub r: f64,
    /// Regime selecting the theory curves this set was compared against.
    pub regime: Regime,
    pub sample_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sup_deviation_finite: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sup_deviation_asymptotic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_relative_error_deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plateau_level: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plateau_onset_alpha: Option<f64>,
    /// Error band of the coupling curve in both conventions: the CSV carries
    /// the standard deviation, the summary records the variance as well.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band_std: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band_variance: Option<Vec<f64>>,
}

/// Config echo, per-set deviations, and pass/fail records of one run.
///
/// `wall_time_seconds` is filled by callers that time the run; it is omitted
/// from serialized artifacts when absent so that seeded reruns produce
/// byte-identical files.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub experiment: String,
    pub master_seed: u64,
    pub config: ExperimentConfig,
    pub sets: Vec<SetSummary>,
    pub checks: Vec<CheckRecord>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_seconds: Option<f64>,
}

/// One parameter set of a CDF experiment: pooled and per-trial estimates plus
/// the theory curves on the same grid.
#[derive(Debug, Clone)]
pub struct CdfSetResult {
    pub set_index: u32,
    /// Position of this set's coupling value within the configured sweep.
    pub sweep_index: usize,
    pub params: CouplingParams,
    pub model: TheoryModel,
    pub pooled: EcdfEstimate,
    pub per_trial: Vec<EcdfEstimate>,
    pub theory_finite: Vec<f64>,
    pub theory_asymptotic: Vec<f64>,
    pub sup_deviation_finite: f64,
    pub sup_deviation_asymptotic: f64,
}

impl CdfSetResult {
    pub fn label(&self) -> String {
        set_label(&self.params)
    }
}

/// Sup difference between two pooled estimates at equal ratio.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseDifference {
    pub ratio: f64,
    pub n: usize,
    pub j0_a: f64,
    pub j0_b: f64,
    pub sup_difference: f64,
}

/// Output of [`run_cdf_scaling`] / [`run_cdf_convergence`].
#[derive(Debug, Clone)]
pub struct CdfExperimentOutput {
    pub sets: Vec<CdfSetResult>,
    pub pairwise: Vec<PairwiseDifference>,
    pub summary: RunSummary,
}

fn normalized_samples(
    params: &CouplingParams,
    master_seed: u64,
    set_index: u32,
    trial: u32,
) -> Result<Vec<f64>> {
    let rp = params.raw_params();
    let mut rng = trial_rng(master_seed, set_index, trial);
    let matrix = sample_matrix(&rp, &mut rng);
    Ok(spectrum(&matrix)?.normalize()?.values().to_vec())
}

fn run_cdf_sets(cfg: &ExperimentConfig, base: u32) -> Result<Vec<CdfSetResult>> {
    let grid = comparison_grid(cfg.grid_step);
    cfg.parameter_sets(base)?
        .into_iter()
        .map(|set| {
            let trials: Vec<Vec<f64>> = (0..cfg.trials as u32)
                .into_par_iter()
                .map(|t| normalized_samples(&set.params, cfg.master_seed, set.set_index, t))
                .collect::<Result<_>>()?;
            let pooled_samples: Vec<f64> = trials.iter().flatten().copied().collect();
            let pooled = ecdf(&pooled_samples, &grid)?;
            let per_trial = trials
                .iter()
                .map(|t| ecdf(t, &grid))
                .collect::<Result<Vec<_>>>()?;
            let model = TheoryModel::new(set.params);
            let theory_finite: Vec<f64> = grid.iter().map(|&x| model.cdf_finite(x)).collect();
            let theory_asymptotic: Vec<f64> =
                grid.iter().map(|&x| model.cdf_asymptotic(x)).collect();
            let sup_deviation_finite = sup_deviation(&pooled, |x| model.cdf_finite(x));
            let sup_deviation_asymptotic = sup_deviation(&pooled, |x| model.cdf_asymptotic(x));
            Ok(CdfSetResult {
                set_index: set.set_index,
                sweep_index: set.sweep_index,
                params: set.params,
                model,
                pooled,
                per_trial,
                theory_finite,
                theory_asymptotic,
                sup_deviation_finite,
                sup_deviation_asymptotic,
            })
        })
        .collect()
}

fn cdf_set_summaries(sets: &[CdfSetResult]) -> Vec<SetSummary> {
    sets.iter()
        .map(|s| SetSummary {
            label: s.label(),
            set_index: s.set_index,
            n: s.params.n(),
            j0: s.params.j0(),
            j1: s.params.j1(),
            ratio: s.params.ratio(),
            r: s.model.r(),
            regime: s.model.regime(),
            sample_count: s.pooled.sample_count,
            sup_deviation_finite: Some(s.sup_deviation_finite),
            sup_deviation_asymptotic: Some(s.sup_deviation_asymptotic),
            max_relative_error_deviation: None,
            plateau_level: None,
            plateau_onset_alpha: None,
            band_std: None,
            band_variance: None,
        })
        .collect()
}

/// Scaling experiment: pooled normalized-eigenvalue distributions across
/// `j0` at fixed ratios, each compared against the finite-size theory, plus
/// pairwise differences across `j0` probing the scaling law.
pub fn run_cdf_scaling(cfg: &ExperimentConfig) -> Result<CdfExperimentOutput> {
    cfg.validate()?;
    let sets = run_cdf_sets(cfg, SCALING_STREAM_BASE)?;

    let mut pairwise = Vec::new();
    if cfg.coupling_sweep.is_ratios() {
        let ratios = cfg.coupling_sweep.values();
        for &n in &cfg.n_values {
            for (sweep_idx, &ratio) in ratios.iter().enumerate() {
                let group: Vec<&CdfSetResult> = sets
                    .iter()
                    .filter(|s| s.params.n() == n && s.sweep_index == sweep_idx)
                    .collect();
                for a in 0..group.len() {
                    for b in (a + 1)..group.len() {
                        let sup = group[a]
                            .pooled
                            .values
                            .iter()
                            .zip(&group[b].pooled.values)
                            .map(|(x, y)| (x - y).abs())
                            .fold(0.0, f64::max);
                        pairwise.push(PairwiseDifference {
                            ratio,
                            n,
                            j0_a: group[a].params.j0(),
                            j0_b: group[b].params.j0(),
                            sup_difference: sup,
                        });
                    }
                }
            }
        }
    }

    let mut checks: Vec<CheckRecord> = sets
        .iter()
        .map(|s| {
            CheckRecord::upper_bound(
                format!("cdf_sup_deviation[{}]", s.label()),
                s.sup_deviation_finite,
                cfg.tolerances.cdf_sup,
            )
        })
        .collect();
    checks.extend(pairwise.iter().map(|p| {
        CheckRecord::upper_bound(
            format!(
                "pairwise_sup[n{} ratio {} j0 {} vs {}]",
                p.n, p.ratio, p.j0_a, p.j0_b
            ),
            p.sup_difference,
            cfg.tolerances.pairwise_sup,
        )
    }));

    let passed = checks.iter().all(|c| c.passed);
    let summary = RunSummary {
        experiment: "cdf-scaling".into(),
        master_seed: cfg.master_seed,
        config: cfg.clone(),
        sets: cdf_set_summaries(&sets),
        checks,
        passed,
        wall_time_seconds: None,
    };
    Ok(CdfExperimentOutput {
        sets,
        pairwise,
        summary,
    })
}

/// Convergence experiment: pooled distributions for increasing `n`, each
/// compared against the asymptotic law.
pub fn run_cdf_convergence(cfg: &ExperimentConfig) -> Result<CdfExperimentOutput> {
    cfg.validate()?;
    let sets = run_cdf_sets(cfg, CONVERGENCE_STREAM_BASE)?;

    let mut checks = Vec::new();
    let n_max = *cfg.n_values.iter().max().expect("validated nonempty");
    let n_min = *cfg.n_values.iter().min().expect("validated nonempty");
    for s in &sets {
        if s.params.n() == n_max {
            checks.push(CheckRecord::upper_bound(
                format!("asymptotic_sup_deviation[{}]", s.label()),
                s.sup_deviation_asymptotic,
                cfg.tolerances.convergence_sup,
            ));
        }
    }
    if n_max != n_min {
        for s in &sets {
            if s.params.n() != n_max {
                continue;
            }
            // Deviation must shrink relative to the smallest-n set with the
            // same couplings scaled to its own dimension.
            if let Some(small) = sets.iter().find(|t| {
                t.params.n() == n_min
                    && t.params.j0() == s.params.j0()
                    && t.params.ratio() == s.params.ratio()
            }) {
                checks.push(CheckRecord {
                    name: format!(
                        "deviation_shrinks[n{} vs n{}, ratio {}]",
                        n_max,
                        n_min,
                        s.params.ratio()
                    ),
                    value: s.sup_deviation_asymptotic,
                    threshold: small.sup_deviation_asymptotic,
                    passed: s.sup_deviation_asymptotic < small.sup_deviation_asymptotic,
                });
            }
        }
    }

    let passed = checks.iter().all(|c| c.passed);
    let summary = RunSummary {
        experiment: "cdf-convergence".into(),
        master_seed: cfg.master_seed,
        config: cfg.clone(),
        sets: cdf_set_summaries(&sets),
        checks,
        passed,
        wall_time_seconds: None,
    };
    Ok(CdfExperimentOutput {
        sets,
        pairwise: Vec::new(),
        summary,
    })
}

/// Empirical plateau of one coupling-error curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlateauStats {
    /// Theoretical onset `r`.
    pub r: f64,
    /// Mean of the empirical curve over the plateau window `(r, 0.95]`.
    pub level: f64,
    /// Finite-size plateau height `5 (n-2) / n`.
    pub target: f64,
    /// First grid alpha where the curve reaches 99% of its value at 0.95.
    pub onset_alpha: f64,
}

/// One parameter set of the coupling-error experiment.
#[derive(Debug, Clone)]
pub struct CouplingSetResult {
    pub set_index: u32,
    pub params: CouplingParams,
    pub model: TheoryModel,
    pub curve: ErrorCurve,
    pub theory_finite: Vec<f64>,
    pub theory_asymptotic: Vec<f64>,
    /// Largest relative gap from the finite-size theory on alpha in
    /// [0.05, 0.95].
    pub max_relative_deviation: f64,
    /// Plateau diagnostics; present only in the bulk-separated regime.
    pub plateau: Option<PlateauStats>,
}

impl CouplingSetResult {
    pub fn label(&self) -> String {
        set_label(&self.params)
    }
}

/// Output of [`run_coupling_experiment`].
#[derive(Debug, Clone)]
pub struct CouplingExperimentOutput {
    pub sets: Vec<CouplingSetResult>,
    pub summary: RunSummary,
}

/// Window on which the curve is compared against the theory. The upper end
/// stays below 1 because the strict-inequality empirical sum never includes
/// the top eigenvalue, while the finite-size linear branch smears its mass
/// over `(r, 1]`.
pub const COUPLING_COMPARISON_WINDOW: (f64, f64) = (0.05, 0.95);

fn coupling_trial_curve(
    params: &CouplingParams,
    master_seed: u64,
    set_index: u32,
    trial: u32,
    alphas: &[f64],
) -> Result<Vec<f64>> {
    let rp = params.raw_params();
    let mut rng = trial_rng(master_seed, set_index, trial);
    let matrix = sample_matrix(&rp, &mut rng);
    let spec = spectrum(&matrix)?;
    alphas
        .iter()
        .map(|&alpha| Ok(coupling_error_threshold(&spec, alpha, params)?.normalized_error))
        .collect()
}

/// Coupling-error experiment: the mean and standard deviation of the
/// normalized error `Delta_alpha / (n j1^2)` across trials, with the
/// finite-size and asymptotic theory on the same grid.
pub fn run_coupling_experiment(cfg: &ExperimentConfig) -> Result<CouplingExperimentOutput> {
    cfg.validate()?;
    let alphas = alpha_grid(cfg.grid_step);
    let (window_lo, window_hi) = COUPLING_COMPARISON_WINDOW;

    let sets: Vec<CouplingSetResult> = cfg
        .parameter_sets(COUPLING_STREAM_BASE)?
        .into_iter()
        .map(|set| {
            let trials: Vec<Vec<f64>> = (0..cfg.trials as u32)
                .into_par_iter()
                .map(|t| {
                    coupling_trial_curve(&set.params, cfg.master_seed, set.set_index, t, &alphas)
                })
                .collect::<Result<_>>()?;

            let trial_count = trials.len() as f64;
            let mut mean = vec![0.0; alphas.len()];
            let mut std = vec![0.0; alphas.len()];
            for t in &trials {
                for (m, v) in mean.iter_mut().zip(t) {
                    *m += v;
                }
            }
            for m in &mut mean {
                *m /= trial_count;
            }
            for t in &trials {
                for ((s, v), m) in std.iter_mut().zip(t).zip(&mean) {
                    let d = v - m;
                    *s += d * d;
                }
            }
            for s in &mut std {
                *s = (*s / trial_count).sqrt();
            }

            let model = TheoryModel::new(set.params);
            let theory_finite = alphas
                .iter()
                .map(|&a| model.coupling_error_finite(a))
                .collect::<Result<Vec<f64>>>()?;
            let theory_asymptotic = alphas
                .iter()
                .map(|&a| model.coupling_error_asymptotic(a))
                .collect::<Result<Vec<f64>>>()?;

            let max_relative_deviation = alphas
                .iter()
                .zip(mean.iter().zip(&theory_finite))
                .filter(|(&a, _)| a >= window_lo - 1e-12 && a <= window_hi + 1e-12)
                .map(|(_, (&m, &t))| if t > 0.0 { (m - t).abs() / t } else { 0.0 })
                .fold(0.0, f64::max);

            // A plateau is only observable when r leaves room inside the
            // comparison window; at ratio 1 the bulk fills all of [0, 1].
            let plateau = (set.params.ratio() <= 1.0 && model.r() < window_hi).then(|| {
                let r = model.r();
                let n = set.params.n() as f64;
                let window: Vec<f64> = alphas
                    .iter()
                    .zip(&mean)
                    .filter(|(&a, _)| a > r && a <= window_hi + 1e-12)
                    .map(|(_, &m)| m)
                    .collect();
                let level = if window.is_empty() {
                    f64::NAN
                } else {
                    window.iter().sum::<f64>() / window.len() as f64
                };
                let reference_idx = alphas
                    .iter()
                    .position(|&a| (a - window_hi).abs() < cfg.grid_step / 2.0)
                    .unwrap_or(alphas.len() - 1);
                let reference = mean[reference_idx];
                let onset_idx = mean
                    .iter()
                    .position(|&m| m >= 0.99 * reference)
                    .unwrap_or(alphas.len() - 1);
                PlateauStats {
                    r,
                    level,
                    target: 5.0 * (n - 2.0) / n,
                    onset_alpha: alphas[onset_idx],
                }
            });

            Ok(CouplingSetResult {
                set_index: set.set_index,
                params: set.params,
                model,
                curve: ErrorCurve {
                    alphas: alphas.clone(),
                    mean,
                    std,
                },
                theory_finite,
                theory_asymptotic,
                max_relative_deviation,
                plateau,
            })
        })
        .collect::<Result<_>>()?;

    // Tolerance checks apply at the largest dimension in the run, where the
    // finite-size theory is expected to hold.
    let n_max = *cfg.n_values.iter().max().expect("validated nonempty");
    let mut checks = Vec::new();
    for s in &sets {
        if s.params.n() != n_max {
            continue;
        }
        checks.push(CheckRecord::upper_bound(
            format!("coupling_relative_deviation[{}]", s.label()),
            s.max_relative_deviation,
            cfg.tolerances.coupling_rel,
        ));
        if let Some(p) = &s.plateau {
            checks.push(CheckRecord::upper_bound(
                format!("plateau_level[{}]", s.label()),
                (p.level - p.target).abs() / p.target,
                cfg.tolerances.plateau_rel,
            ));
            checks.push(CheckRecord::upper_bound(
                format!("plateau_onset[{}]", s.label()),
                (p.onset_alpha - p.r).abs(),
                cfg.tolerances.plateau_onset,
            ));
        }
    }

    let passed = checks.iter().all(|c| c.passed);
    let sets_summary = sets
        .iter()
        .map(|s| SetSummary {
            label: s.label(),
            set_index: s.set_index,
            n: s.params.n(),
            j0: s.params.j0(),
            j1: s.params.j1(),
            ratio: s.params.ratio(),
            r: s.model.r(),
            regime: s.model.regime(),
            sample_count: cfg.trials * s.params.n(),
            sup_deviation_finite: None,
            sup_deviation_asymptotic: None,
            max_relative_error_deviation: Some(s.max_relative_deviation),
            plateau_level: s.plateau.map(|p| p.level),
            plateau_onset_alpha: s.plateau.map(|p| p.onset_alpha),
            band_std: Some(s.curve.std.clone()),
            band_variance: Some(s.curve.std.iter().map(|v| v * v).collect()),
        })
        .collect();
    let summary = RunSummary {
        experiment: "coupling-error".into(),
        master_seed: cfg.master_seed,
        config: cfg.clone(),
        sets: sets_summary,
        checks,
        passed,
        wall_time_seconds: None,
    };
    Ok(CouplingExperimentOutput { sets, summary })
}

// ---------------------------------------------------------------------------
// CSV / JSON artifacts
// ---------------------------------------------------------------------------

fn set_label(params: &CouplingParams) -> String {
    format!("n{}_j0_{}_j1_{}", params.n(), params.j0(), params.j1())
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

/// CSV of one CDF set: `x, empirical, theory_finite, theory_asymptotic`.
pub fn write_cdf_set_csv(dir: &Path, kind: &str, set: &CdfSetResult) -> Result<PathBuf> {
    let mut out = String::from("x,empirical,theory_finite,theory_asymptotic\n");
    for (((x, e), tf), ta) in set
        .pooled
        .grid
        .iter()
        .zip(&set.pooled.values)
        .zip(&set.theory_finite)
        .zip(&set.theory_asymptotic)
    {
        writeln!(out, "{x},{e},{tf},{ta}").expect("string write");
    }
    let path = dir.join(format!("{kind}_{}.csv", set.label()));
    write_atomic(&path, &out)?;
    Ok(path)
}

/// Long-format CSV of the per-trial ECDF curves: `x, trial, empirical`.
pub fn write_cdf_trials_csv(dir: &Path, kind: &str, set: &CdfSetResult) -> Result<PathBuf> {
    let mut out = String::from("x,trial,empirical\n");
    for (trial, estimate) in set.per_trial.iter().enumerate() {
        for (x, v) in estimate.grid.iter().zip(&estimate.values) {
            writeln!(out, "{x},{trial},{v}").expect("string write");
        }
    }
    let path = dir.join(format!("{kind}_{}_trials.csv", set.label()));
    write_atomic(&path, &out)?;
    Ok(path)
}

/// CSV of one coupling-error set:
/// `alpha, empirical, theory_finite, theory_asymptotic, std`.
pub fn write_coupling_set_csv(dir: &Path, set: &CouplingSetResult) -> Result<PathBuf> {
    let mut out = String::from("alpha,empirical,theory_finite,theory_asymptotic,std\n");
    for ((((a, m), tf), ta), s) in set
        .curve
        .alphas
        .iter()
        .zip(&set.curve.mean)
        .zip(&set.theory_finite)
        .zip(&set.theory_asymptotic)
        .zip(&set.curve.std)
    {
        writeln!(out, "{a},{m},{tf},{ta},{s}").expect("string write");
    }
    let path = dir.join(format!("coupling_error_{}.csv", set.label()));
    write_atomic(&path, &out)?;
    Ok(path)
}

/// Pretty-printed JSON summary artifact.
pub fn write_summary_json(dir: &Path, name: &str, summary: &RunSummary) -> Result<PathBuf> {
    let path = dir.join(format!("{name}.json"));
    let mut body = serde_json::to_string_pretty(summary)?;
    body.push('\n');
    write_atomic(&path, &body)?;
    Ok(path)
}

/// Writes every artifact of a CDF experiment run into `dir`.
pub fn write_cdf_artifacts(dir: &Path, kind: &str, output: &CdfExperimentOutput) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for set in &output.sets {
        paths.push(write_cdf_set_csv(dir, kind, set)?);
        paths.push(write_cdf_trials_csv(dir, kind, set)?);
    }
    paths.push(write_summary_json(dir, &format!("{kind}_summary"), &output.summary)?);
    Ok(paths)
}

/// Writes every artifact of a coupling-error run into `dir`.
pub fn write_coupling_artifacts(
    dir: &Path,
    output: &CouplingExperimentOutput,
) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for set in &output.sets {
        paths.push(write_coupling_set_csv(dir, set)?);
    }
    paths.push(write_summary_json(dir, "coupling_error_summary", &output.summary)?);
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ecdf_counts_with_strict_inequality() {
        let est = ecdf(&[0.0, 0.5, 1.0], &[0.25, 0.75, 1.0_f64.next_up()]).unwrap();
        assert_relative_eq!(est.values[0], 1.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(est.values[1], 2.0 / 3.0, max_relative = 1e-15);
        assert_eq!(est.values[2], 1.0);

        let tied = ecdf(&[0.5, 0.5, 0.5], &[0.5]).unwrap();
        assert_eq!(tied.values[0], 0.0);
    }

    #[test]
    fn ecdf_rejects_bad_inputs() {
        assert!(ecdf(&[], &[0.5]).is_err());
        assert!(ecdf(&[0.1], &[0.5, 0.4]).is_err());
        assert!(ecdf(&[0.1], &[-0.1, 0.5]).is_err());
    }

    #[test]
    fn sup_deviation_examples() {
        let est = ecdf(&[0.1, 0.2, 0.9], &[0.0, 0.5, 1.0_f64.next_up()]).unwrap();
        assert_eq!(sup_deviation(&est, |x| {
            // Reproduce the estimate itself: deviation is zero.
            if x <= 0.0 {
                0.0
            } else if x <= 0.5 {
                2.0 / 3.0
            } else {
                1.0
            }
        }), 0.0);
        let offset = sup_deviation(&est, |x| {
            (if x <= 0.0 {
                0.0
            } else if x <= 0.5 {
                2.0 / 3.0
            } else {
                1.0
            }) + 0.02
        });
        assert_relative_eq!(offset, 0.02, max_relative = 1e-12);
    }

    #[test]
    fn comparison_grid_shape() {
        let grid = comparison_grid(0.01);
        assert_eq!(grid.len(), 102);
        assert_eq!(grid[0], 0.0);
        assert_eq!(grid[100], 1.0);
        assert!(grid[101] > 1.0);
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn config_validation_catches_errors() {
        let mut cfg = ExperimentConfig::cdf_scaling_defaults(1);
        cfg.trials = 0;
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::cdf_scaling_defaults(1);
        cfg.grid_step = 0.03; // does not divide 1
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::cdf_scaling_defaults(1);
        cfg.grid_step = 0.2;
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::cdf_scaling_defaults(1);
        cfg.n_values = vec![2];
        assert!(cfg.validate().is_err());

        assert!(ExperimentConfig::coupling_defaults(1).validate().is_ok());
    }

    fn tiny_scaling_config() -> ExperimentConfig {
        ExperimentConfig {
            master_seed: 7,
            trials: 3,
            n_values: vec![20],
            j0_values: vec![1.0, 2.0],
            coupling_sweep: CouplingSweep::Ratios(vec![0.3]),
            grid_step: 0.05,
            output_dir: None,
            tolerances: Tolerances::default(),
        }
    }

    #[test]
    fn pooled_sample_count_is_trials_times_n() {
        let out = run_cdf_scaling(&tiny_scaling_config()).unwrap();
        for set in &out.sets {
            assert_eq!(set.pooled.sample_count, 3 * 20);
        }
    }

    #[test]
    fn ecdf_curves_end_at_one_and_are_monotone() {
        let out = run_cdf_scaling(&tiny_scaling_config()).unwrap();
        for set in &out.sets {
            assert_eq!(*set.pooled.values.last().unwrap(), 1.0);
            assert!(set.pooled.values.windows(2).all(|w| w[0] <= w[1]));
            for trial in &set.per_trial {
                assert_eq!(*trial.values.last().unwrap(), 1.0);
                assert!(trial.values.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }

    #[test]
    fn scaling_run_is_deterministic() {
        let a = run_cdf_scaling(&tiny_scaling_config()).unwrap();
        let b = run_cdf_scaling(&tiny_scaling_config()).unwrap();
        for (x, y) in a.sets.iter().zip(&b.sets) {
            assert_eq!(x.pooled.values, y.pooled.values);
        }
        assert_eq!(a.pairwise.len(), 1);
        assert_eq!(
            a.pairwise[0].sup_difference.to_bits(),
            b.pairwise[0].sup_difference.to_bits()
        );
    }

    #[test]
    fn coupling_curve_mean_is_nondecreasing() {
        let cfg = ExperimentConfig {
            master_seed: 5,
            trials: 4,
            n_values: vec![30],
            j0_values: vec![1.0],
            coupling_sweep: CouplingSweep::Disorders(vec![0.3]),
            grid_step: 0.05,
            output_dir: None,
            tolerances: Tolerances::default(),
        };
        let out = run_coupling_experiment(&cfg).unwrap();
        let set = &out.sets[0];
        assert!(set.curve.mean.windows(2).all(|w| w[0] <= w[1] + 1e-15));
        assert_eq!(set.curve.alphas.len(), set.curve.mean.len());
        assert_eq!(set.curve.alphas.len(), set.curve.std.len());
        // alpha = 0 truncates nothing.
        assert_eq!(set.curve.mean[0], 0.0);
    }

    #[test]
    fn csv_artifacts_are_bit_identical_across_reruns() {
        let dir = std::env::temp_dir().join(format!("normeig_test_{}", std::process::id()));
        let cfg = tiny_scaling_config();
        let out1 = run_cdf_scaling(&cfg).unwrap();
        let out2 = run_cdf_scaling(&cfg).unwrap();
        let p1 = write_cdf_set_csv(&dir.join("a"), "cdf_scaling", &out1.sets[0]).unwrap();
        let p2 = write_cdf_set_csv(&dir.join("b"), "cdf_scaling", &out2.sets[0]).unwrap();
        let c1 = std::fs::read(&p1).unwrap();
        let c2 = std::fs::read(&p2).unwrap();
        assert_eq!(c1, c2);
        std::fs::remove_dir_all(&dir).ok();
    }
}
