//! Verification suite: analytic identity/continuity/quadrature checks plus
//! the three seeded Monte Carlo comparisons, bundled behind `verify`.
//!
//! The quadrature references here integrate the raw distribution densities
//! numerically and never call the closed forms they are checking.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use serde::Serialize;

use normeig::ensemble::{sample_matrix, spectrum, trial_rng, CouplingParams};
use normeig::experiments::{write_cdf_artifacts, write_coupling_artifacts, ExperimentConfig};
use normeig::factorization::{coupling_error_rank, frobenius_residual, low_rank_factor};
use normeig::theory::{g_function, r_value, semicircle_cdf_component, TheoryModel};

use crate::CliError;

/// RNG set-index range reserved for verify's own draws, disjoint from the
/// experiment stream bases.
const VERIFY_STREAM_BASE: u32 = 3 << 16;

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub master_seed: u64,
    pub fast: bool,
    pub checks: Vec<CheckOutcome>,
    pub passed: bool,
}

/// Composite Simpson integration of `f` over `[lo, hi]`.
fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
    let steps = 2 * panels;
    let h = (hi - lo) / steps as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + h * i as f64);
    }
    acc * h / 3.0
}

/// Numerical `integral_0^x sqrt(r^2 - (2t - r)^2) dt` via the smoothing
/// substitution `2t - r = r sin(theta)`.
fn semicircle_integral_reference(x: f64, r: f64) -> f64 {
    let hi = ((2.0 * x - r) / r).clamp(-1.0, 1.0).asin();
    simpson(|theta| r * theta.cos() * (r / 2.0) * theta.cos(), -PI / 2.0, hi, 2000)
}

/// Numerical `integral_0^x t^2 sqrt(r^2 - (2t - r)^2) dt`, same substitution.
fn weighted_semicircle_integral_reference(x: f64, r: f64) -> f64 {
    let hi = ((2.0 * x - r) / r).clamp(-1.0, 1.0).asin();
    simpson(
        |theta| {
            let t = r * (1.0 + theta.sin()) / 2.0;
            t * t * r * theta.cos() * (r / 2.0) * theta.cos()
        },
        -PI / 2.0,
        hi,
        2000,
    )
}

/// Numerical integration of `16 J1^2 / c^2 * integral_0^alpha x^2 n dP`
/// against the finite-size distribution, normalized by `n J1^2`. The
/// prefactor constant `c` is `r` in the bulk-separated regime and 1 in the
/// bulk-dominated regime, matching the spectral spread each regime predicts.
fn coupling_error_reference(alpha: f64, n: usize, ratio: f64) -> f64 {
    let n_f = n as f64;
    let r = r_value(1.0, ratio).expect("positive couplings");
    if ratio <= 1.0 {
        let bulk = 4.0 * (n_f - 2.0) / (PI * n_f * r * r)
            * weighted_semicircle_integral_reference(alpha.min(r), r);
        let linear = if alpha > r {
            (alpha.powi(3) - r.powi(3)) / (3.0 * (1.0 - r) * n_f)
        } else {
            0.0
        };
        16.0 / (r * r) * (bulk + linear)
    } else {
        16.0 * 4.0 * (n_f - 1.0) / (PI * n_f) * weighted_semicircle_integral_reference(alpha, 1.0)
    }
}

fn check_eq14_identity(master_seed: u64) -> CheckOutcome {
    let mut worst_rel = 0.0_f64;
    let mut worst_full = 0.0_f64;
    let mut failed = None;
    for (set_offset, &n) in [10usize, 50].iter().enumerate() {
        let params = CouplingParams::new(1.0, 0.5, n).expect("valid params");
        for trial in 0..5u32 {
            let mut rng = trial_rng(master_seed, VERIFY_STREAM_BASE + set_offset as u32, trial);
            let matrix = sample_matrix(&params.raw_params(), &mut rng);
            let spec = match spectrum(&matrix) {
                Ok(s) => s,
                Err(e) => return CheckOutcome::new("eq14_identity", false, e.to_string()),
            };
            for &k in &[1usize, n / 2, n - 1, n] {
                let factor = match low_rank_factor(&matrix, k) {
                    Ok(f) => f,
                    Err(e) => return CheckOutcome::new("eq14_identity", false, e.to_string()),
                };
                let residual = match frobenius_residual(&matrix, spec.smallest(), &factor) {
                    Ok(r) => r,
                    Err(e) => return CheckOutcome::new("eq14_identity", false, e.to_string()),
                };
                let tail = coupling_error_rank(&spec, k).expect("k within range");
                if tail > 0.0 {
                    let rel = (residual - tail).abs() / tail;
                    worst_rel = worst_rel.max(rel);
                    if rel > 1e-9 {
                        failed = Some(format!(
                            "residual vs tail-sum gap {rel:.3e} at n={n}, k={k}"
                        ));
                    }
                } else {
                    // k = n, or k = n-1 where the dropped eigenvalue is
                    // lambda_n itself: the exact residual is zero.
                    let bound = 1e-8 * matrix.frobenius_norm();
                    worst_full = worst_full.max(residual);
                    if residual > bound {
                        failed = Some(format!(
                            "zero-tail residual {residual:.3e} above {bound:.3e} at n={n}, k={k}"
                        ));
                    }
                }
            }
        }
    }
    match failed {
        Some(detail) => CheckOutcome::new("eq14_identity", false, detail),
        None => CheckOutcome::new(
            "eq14_identity",
            true,
            format!(
                "worst relative gap {worst_rel:.2e}; worst full-rank residual {worst_full:.2e}"
            ),
        ),
    }
}

fn random_models(master_seed: u64, count: usize) -> Vec<(usize, f64)> {
    let mut rng = trial_rng(master_seed, VERIFY_STREAM_BASE + 8, 0);
    (0..count)
        .map(|_| {
            let n = rng.random_range(3..=1000usize);
            let ratio = rng.random_range(0.01..0.999f64);
            (n, ratio)
        })
        .collect()
}

fn check_branch_continuity(master_seed: u64) -> CheckOutcome {
    let mut worst = 0.0_f64;
    for (n, ratio) in random_models(master_seed, 50) {
        let n_f = n as f64;
        let r = r_value(1.0, ratio).expect("positive couplings");
        let model = TheoryModel::new(CouplingParams::new(1.0, ratio, n).expect("valid params"));

        // CDF: semicircle branch vs linear branch, both evaluated at r.
        let lower_cdf = 1.0 / n_f
            + 4.0 * (n_f - 2.0) / (PI * n_f * r * r)
                * semicircle_cdf_component(r, r).expect("in domain");
        let upper_cdf = 1.0 + (r - 1.0) / ((1.0 - r) * n_f);
        worst = worst.max((lower_cdf - upper_cdf).abs());
        worst = worst.max((model.cdf_finite(r) - lower_cdf).abs());

        // Coupling error: g branch vs polynomial branch at r.
        let lower_err =
            (n_f - 2.0) / (3.0 * PI * n_f) * g_function(1.0).expect("in domain");
        let upper_err = 15.0 * (n_f - 2.0) / (3.0 * n_f);
        worst = worst.max((lower_err - upper_err).abs());
        worst = worst.max(
            (model.coupling_error_finite(r).expect("in domain") - lower_err).abs(),
        );
    }
    CheckOutcome::new(
        "branch_continuity",
        worst <= 1e-12,
        format!("worst branch gap {worst:.2e} over 50 models (tolerance 1e-12)"),
    )
}

fn check_boundary_values(master_seed: u64) -> CheckOutcome {
    let mut detail = Vec::new();
    let mut passed = true;

    for (n, ratio) in random_models(master_seed.wrapping_add(1), 20) {
        let model = TheoryModel::new(CouplingParams::new(1.0, ratio, n).expect("valid params"));
        if model.cdf_finite(1.0) != 1.0 {
            passed = false;
            detail.push(format!("cdf_finite(1) != 1 at n={n}, ratio={ratio}"));
        }
    }
    let g0 = g_function(0.0).expect("in domain");
    if g0 != 0.0 {
        passed = false;
        detail.push(format!("g(0) = {g0}"));
    }
    let g1_gap = (g_function(1.0).expect("in domain") - 15.0 * PI).abs();
    if g1_gap > 1e-12 {
        passed = false;
        detail.push(format!("|g(1) - 15 pi| = {g1_gap:.2e}"));
    }
    if detail.is_empty() {
        detail.push(format!("cdf(1) exact; |g(1) - 15 pi| = {g1_gap:.2e}"));
    }
    CheckOutcome::new("boundary_values", passed, detail.join("; "))
}

fn check_semicircle_quadrature(master_seed: u64) -> CheckOutcome {
    let mut rng = trial_rng(master_seed, VERIFY_STREAM_BASE + 9, 0);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let r = rng.random_range(0.05..=1.0f64);
        let x = rng.random_range(0.0..=r);
        let closed = semicircle_cdf_component(x, r).expect("in domain");
        let reference = semicircle_integral_reference(x, r);
        worst = worst.max((closed - reference).abs());
    }
    CheckOutcome::new(
        "semicircle_quadrature",
        worst <= 1e-10,
        format!("worst |closed - quadrature| {worst:.2e} over 100 pairs (tolerance 1e-10)"),
    )
}

fn check_coupling_error_integral() -> CheckOutcome {
    let cases = [
        (100usize, 0.3),
        (100, 10.0),
        (500, 0.1),
        (10, 0.5),
        (50, 2.0),
    ];
    let mut worst = 0.0_f64;
    for (n, ratio) in cases {
        let model = TheoryModel::new(CouplingParams::new(1.0, ratio, n).expect("valid params"));
        for i in 1..=100 {
            let alpha = i as f64 * 0.01;
            let closed = model.coupling_error_finite(alpha).expect("in domain");
            let reference = coupling_error_reference(alpha, n, ratio);
            worst = worst.max((closed - reference).abs() / closed);
        }
    }
    CheckOutcome::new(
        "coupling_error_integral",
        worst <= 1e-8,
        format!(
            "worst relative gap {worst:.2e} vs numerical integration on the 0.01 grid (tolerance 1e-8)"
        ),
    )
}

fn adopt_summary_checks(prefix: &str, summary: &normeig::experiments::RunSummary) -> Vec<CheckOutcome> {
    summary
        .checks
        .iter()
        .map(|c| {
            CheckOutcome::new(
                &format!("{prefix}:{}", c.name),
                c.passed,
                format!("value {:.5} vs threshold {:.5}", c.value, c.threshold),
            )
        })
        .collect()
}

/// Runs the suite. Monte Carlo comparisons are skipped with `fast`; artifacts
/// (report JSON plus, for the full suite, every experiment CSV/JSON) are
/// written into `out_dir` when given.
pub fn run(master_seed: u64, fast: bool, out_dir: Option<&Path>) -> Result<VerifyReport, CliError> {
    let mut checks = vec![
        check_eq14_identity(master_seed),
        check_branch_continuity(master_seed),
        check_boundary_values(master_seed),
        check_semicircle_quadrature(master_seed),
        check_coupling_error_integral(),
    ];

    if !fast {
        let scaling_cfg = ExperimentConfig::cdf_scaling_defaults(master_seed);
        let scaling = normeig::experiments::run_cdf_scaling(&scaling_cfg)?;
        checks.extend(adopt_summary_checks("cdf_scaling", &scaling.summary));

        let convergence_cfg = ExperimentConfig::cdf_convergence_defaults(master_seed);
        let convergence = normeig::experiments::run_cdf_convergence(&convergence_cfg)?;
        checks.extend(adopt_summary_checks("cdf_convergence", &convergence.summary));

        let coupling_cfg = ExperimentConfig::coupling_defaults(master_seed);
        let coupling = normeig::experiments::run_coupling_experiment(&coupling_cfg)?;
        checks.extend(adopt_summary_checks("coupling_error", &coupling.summary));

        if let Some(dir) = out_dir {
            crate::commands::ensure_dir(dir)?;
            write_cdf_artifacts(dir, "cdf_scaling", &scaling)?;
            write_cdf_artifacts(dir, "cdf_convergence", &convergence)?;
            write_coupling_artifacts(dir, &coupling)?;
        }
    }

    let passed = checks.iter().all(|c| c.passed);
    let report = VerifyReport {
        master_seed,
        fast,
        checks,
        passed,
    };
    if let Some(dir) = out_dir {
        crate::commands::ensure_dir(dir)?;
        let body = serde_json::to_string_pretty(&report)
            .map_err(|e| CliError::Validation(format!("report serialization: {e}")))?;
        std::fs::write(dir.join("verify_report.json"), body + "\n")
            .map_err(|e| CliError::Validation(format!("--out: {e}")))?;
    }
    Ok(report)
}

pub fn render_table(report: &VerifyReport) -> String {
    let mode = if report.fast { "fast" } else { "full" };
    let width = report
        .checks
        .iter()
        .map(|c| c.name.len())
        .max()
        .unwrap_or(8)
        .max("check".len());
    let mut out = format!(
        "normeig verification (seed {}, {mode})\n{:<width$}  result  detail\n",
        report.master_seed, "check",
    );
    for check in &report.checks {
        let result = if check.passed { "PASS" } else { "FAIL" };
        out.push_str(&format!(
            "{:<width$}  {result:<6}  {}\n",
            check.name, check.detail
        ));
    }
    out.push_str(if report.passed {
        "all checks passed\n"
    } else {
        "some checks FAILED\n"
    });
    out
}
