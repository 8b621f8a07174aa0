//! Subcommand implementations: input validation, pipeline calls, and
//! CSV/JSON emission.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::ValueEnum;
use serde_json::json;

use normeig::ensemble::{sample_matrix, spectrum, trial_rng, CouplingParams};
use normeig::experiments::{
    alpha_grid, run_cdf_convergence, run_cdf_scaling, run_coupling_experiment,
    write_cdf_artifacts, write_coupling_artifacts, CouplingSweep, ExperimentConfig,
};
use normeig::factorization::{coupling_error_rank, coupling_error_threshold, frobenius_residual, low_rank_factor};
use normeig::theory::TheoryModel;

use crate::{
    resolve_seed, CliError, CouplingArgs, CouplingErrorArgs, ExperimentArgs, FactorizeArgs,
    SampleArgs, TheoryCurveArgs, VerifyArgs,
};

fn is_positive_finite(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExperimentKind {
    /// Normalized-eigenvalue distribution across J0 at fixed ratios
    CdfScaling,
    /// Convergence of the distribution with growing n
    CdfConvergence,
    /// Coupling error as a function of the threshold ratio alpha
    CouplingError,
}

impl CouplingArgs {
    /// Validates the flags and assembles the coupling parameters.
    pub fn params(&self) -> Result<CouplingParams, CliError> {
        if self.n < 3 {
            return Err(CliError::Validation(format!(
                "--n must be at least 3, got {}",
                self.n
            )));
        }
        if !is_positive_finite(self.j0) {
            return Err(CliError::Validation(format!(
                "--j0 must be a positive finite real, got {}",
                self.j0
            )));
        }
        let j1 = match (self.j1, self.ratio) {
            (Some(j1), None) => {
                if !is_positive_finite(j1) {
                    return Err(CliError::Validation(format!(
                        "--j1 must be a positive finite real, got {j1}"
                    )));
                }
                j1
            }
            (None, Some(ratio)) => {
                if !is_positive_finite(ratio) {
                    return Err(CliError::Validation(format!(
                        "--ratio must be a positive finite real, got {ratio}"
                    )));
                }
                ratio * self.j0
            }
            (None, None) => {
                return Err(CliError::Validation(
                    "exactly one of --j1 or --ratio is required".into(),
                ))
            }
            (Some(_), Some(_)) => unreachable!("clap rejects --j1 with --ratio"),
        };
        CouplingParams::new(self.j0, j1, self.n).map_err(Into::into)
    }
}

fn validate_grid_step(step: f64) -> Result<(), CliError> {
    if !is_positive_finite(step) || step > 0.1 {
        return Err(CliError::Validation(format!(
            "--grid-step must lie in (0, 0.1], got {step}"
        )));
    }
    let cells = 1.0 / step;
    if (cells - cells.round()).abs() > 1e-9 * cells {
        return Err(CliError::Validation(format!(
            "--grid-step must divide 1 into an integer number of cells, got {step}"
        )));
    }
    Ok(())
}

/// Writes to `--out` when given, otherwise to stdout.
fn emit(out: &Option<PathBuf>, contents: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    fs::create_dir_all(parent)
                        .map_err(|e| CliError::Validation(format!("--out: {e}")))?;
                }
            }
            fs::write(path, contents).map_err(|e| CliError::Validation(format!("--out: {e}")))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(contents.as_bytes())
                .map_err(|e| CliError::Validation(format!("stdout: {e}")))
        }
    }
}

pub fn sample(args: SampleArgs) -> Result<i32, CliError> {
    let params = args.coupling.params()?;
    let seed = resolve_seed(args.seed)?;
    let mut rng = trial_rng(seed, 0, args.trial);
    let matrix = sample_matrix(&params.raw_params(), &mut rng);
    let spec = spectrum(&matrix)?;
    let normalized = spec.normalize()?;

    let contents = match args.format {
        Format::Csv => {
            let mut out = String::from("index,lambda,lambda_hat\n");
            for (i, (l, lh)) in spec.values().iter().zip(normalized.values()).enumerate() {
                out.push_str(&format!("{},{l},{lh}\n", i + 1));
            }
            out
        }
        Format::Json => {
            let body = json!({
                "n": params.n(),
                "j0": params.j0(),
                "j1": params.j1(),
                "master_seed": seed,
                "trial": args.trial,
                "lambda": spec.values(),
                "lambda_hat": normalized.values(),
            });
            format!("{}\n", serde_json::to_string_pretty(&body).expect("json"))
        }
    };
    emit(&args.out, &contents)?;
    Ok(0)
}

pub fn theory_cdf(args: TheoryCurveArgs) -> Result<i32, CliError> {
    let params = args.coupling.params()?;
    validate_grid_step(args.grid_step)?;
    let model = TheoryModel::new(params);
    let grid = alpha_grid(args.grid_step);
    let finite: Vec<f64> = grid.iter().map(|&x| model.cdf_finite(x)).collect();
    let asymptotic: Vec<f64> = grid.iter().map(|&x| model.cdf_asymptotic(x)).collect();

    let contents = match args.format {
        Format::Csv => {
            let mut out = String::from("x,cdf_finite,cdf_asymptotic\n");
            for ((x, f), a) in grid.iter().zip(&finite).zip(&asymptotic) {
                out.push_str(&format!("{x},{f},{a}\n"));
            }
            out
        }
        Format::Json => {
            let body = json!({
                "n": params.n(),
                "j0": params.j0(),
                "j1": params.j1(),
                "r": model.r(),
                "regime": model.regime(),
                "x": grid,
                "cdf_finite": finite,
                "cdf_asymptotic": asymptotic,
            });
            format!("{}\n", serde_json::to_string_pretty(&body).expect("json"))
        }
    };
    emit(&args.out, &contents)?;
    Ok(0)
}

pub fn theory_error(args: TheoryCurveArgs) -> Result<i32, CliError> {
    let params = args.coupling.params()?;
    validate_grid_step(args.grid_step)?;
    let model = TheoryModel::new(params);
    let grid = alpha_grid(args.grid_step);
    let finite = grid
        .iter()
        .map(|&a| model.coupling_error_finite(a))
        .collect::<Result<Vec<f64>, _>>()?;
    let asymptotic = grid
        .iter()
        .map(|&a| model.coupling_error_asymptotic(a))
        .collect::<Result<Vec<f64>, _>>()?;

    let contents = match args.format {
        Format::Csv => {
            let mut out = String::from("alpha,error_finite,error_asymptotic\n");
            for ((a, f), asym) in grid.iter().zip(&finite).zip(&asymptotic) {
                out.push_str(&format!("{a},{f},{asym}\n"));
            }
            out
        }
        Format::Json => {
            let body = json!({
                "n": params.n(),
                "j0": params.j0(),
                "j1": params.j1(),
                "r": model.r(),
                "regime": model.regime(),
                "alpha": grid,
                "error_finite": finite,
                "error_asymptotic": asymptotic,
            });
            format!("{}\n", serde_json::to_string_pretty(&body).expect("json"))
        }
    };
    emit(&args.out, &contents)?;
    Ok(0)
}

pub fn factorize(args: FactorizeArgs) -> Result<i32, CliError> {
    let params = args.coupling.params()?;
    if args.rank == 0 || args.rank > params.n() {
        return Err(CliError::Validation(format!(
            "--rank must lie in [1, {}], got {}",
            params.n(),
            args.rank
        )));
    }
    let seed = resolve_seed(args.seed)?;
    let mut rng = trial_rng(seed, 0, args.trial);
    let matrix = sample_matrix(&params.raw_params(), &mut rng);
    let spec = spectrum(&matrix)?;
    let factor = low_rank_factor(&matrix, args.rank)?;
    let residual = frobenius_residual(&matrix, spec.smallest(), &factor)?;
    let tail = coupling_error_rank(&spec, args.rank)?;

    let contents = match args.format {
        Format::Csv => format!(
            "n,j0,j1,master_seed,trial,rank,residual_squared,tail_sum,frobenius_norm\n{},{},{},{seed},{},{},{residual},{tail},{}\n",
            params.n(),
            params.j0(),
            params.j1(),
            args.trial,
            args.rank,
            matrix.frobenius_norm(),
        ),
        Format::Json => {
            let body = json!({
                "n": params.n(),
                "j0": params.j0(),
                "j1": params.j1(),
                "master_seed": seed,
                "trial": args.trial,
                "rank": args.rank,
                "residual_squared": residual,
                "tail_sum": tail,
                "frobenius_norm": matrix.frobenius_norm(),
            });
            format!("{}\n", serde_json::to_string_pretty(&body).expect("json"))
        }
    };
    emit(&args.out, &contents)?;
    Ok(0)
}

pub fn coupling_error(args: CouplingErrorArgs) -> Result<i32, CliError> {
    let params = args.coupling.params()?;
    if !(0.0..=1.0).contains(&args.alpha) {
        return Err(CliError::Validation(format!(
            "--alpha must lie in [0, 1], got {}",
            args.alpha
        )));
    }
    let seed = resolve_seed(args.seed)?;
    let mut rng = trial_rng(seed, 0, args.trial);
    let matrix = sample_matrix(&params.raw_params(), &mut rng);
    let spec = spectrum(&matrix)?;
    let report = coupling_error_threshold(&spec, args.alpha, &params)?;

    let contents = match args.format {
        Format::Csv => format!(
            "n,j0,j1,master_seed,trial,alpha,kept_count,raw_error,normalized_error\n{},{},{},{seed},{},{},{},{},{}\n",
            params.n(),
            params.j0(),
            params.j1(),
            args.trial,
            report.alpha,
            report.kept_count,
            report.raw_error,
            report.normalized_error,
        ),
        Format::Json => {
            let body = json!({
                "n": params.n(),
                "j0": params.j0(),
                "j1": params.j1(),
                "master_seed": seed,
                "trial": args.trial,
                "alpha": report.alpha,
                "kept_count": report.kept_count,
                "raw_error": report.raw_error,
                "normalized_error": report.normalized_error,
            });
            format!("{}\n", serde_json::to_string_pretty(&body).expect("json"))
        }
    };
    emit(&args.out, &contents)?;
    Ok(0)
}

fn build_experiment_config(args: &ExperimentArgs) -> Result<(ExperimentConfig, PathBuf), CliError> {
    let seed = resolve_seed(args.seed)?;
    let mut cfg = match args.kind {
        ExperimentKind::CdfScaling => ExperimentConfig::cdf_scaling_defaults(seed),
        ExperimentKind::CdfConvergence => ExperimentConfig::cdf_convergence_defaults(seed),
        ExperimentKind::CouplingError => ExperimentConfig::coupling_defaults(seed),
    };
    if let Some(trials) = args.trials {
        if trials == 0 {
            return Err(CliError::Validation("--trials must be at least 1".into()));
        }
        cfg.trials = trials;
    }
    if !args.n_values.is_empty() {
        for &n in &args.n_values {
            if n < 3 {
                return Err(CliError::Validation(format!(
                    "--n must be at least 3, got {n}"
                )));
            }
        }
        cfg.n_values = args.n_values.clone();
    }
    if !args.j0_values.is_empty() {
        for &j0 in &args.j0_values {
            if !is_positive_finite(j0) {
                return Err(CliError::Validation(format!(
                    "--j0 must be a positive finite real, got {j0}"
                )));
            }
        }
        cfg.j0_values = args.j0_values.clone();
    }
    match (args.j1_values.is_empty(), args.ratio_values.is_empty()) {
        (false, true) => {
            for &j1 in &args.j1_values {
                if !is_positive_finite(j1) {
                    return Err(CliError::Validation(format!(
                        "--j1 must be a positive finite real, got {j1}"
                    )));
                }
            }
            cfg.coupling_sweep = CouplingSweep::Disorders(args.j1_values.clone());
        }
        (true, false) => {
            for &r in &args.ratio_values {
                if !is_positive_finite(r) {
                    return Err(CliError::Validation(format!(
                        "--ratio must be a positive finite real, got {r}"
                    )));
                }
            }
            cfg.coupling_sweep = CouplingSweep::Ratios(args.ratio_values.clone());
        }
        (true, true) => {}
        (false, false) => unreachable!("clap rejects --j1 with --ratio"),
    }
    if let Some(step) = args.grid_step {
        validate_grid_step(step)?;
        cfg.grid_step = step;
    }
    let out = args.out.clone().ok_or_else(|| {
        CliError::Validation("--out is required: experiments write one CSV per parameter set".into())
    })?;
    cfg.output_dir = Some(out.clone());
    cfg.validate()?;
    Ok((cfg, out))
}

pub fn experiment(args: ExperimentArgs) -> Result<i32, CliError> {
    crate::configure_threads(args.threads)?;
    let (cfg, out_dir) = build_experiment_config(&args)?;
    let started = Instant::now();

    match args.kind {
        ExperimentKind::CdfScaling | ExperimentKind::CdfConvergence => {
            let kind = match args.kind {
                ExperimentKind::CdfScaling => "cdf_scaling",
                _ => "cdf_convergence",
            };
            let mut output = if matches!(args.kind, ExperimentKind::CdfScaling) {
                run_cdf_scaling(&cfg)?
            } else {
                run_cdf_convergence(&cfg)?
            };
            output.summary.wall_time_seconds = Some(started.elapsed().as_secs_f64());
            write_cdf_artifacts(&out_dir, kind, &output)?;
            for set in &output.sets {
                println!(
                    "{}: sup deviation finite {:.4}, asymptotic {:.4} ({} samples)",
                    set.label(),
                    set.sup_deviation_finite,
                    set.sup_deviation_asymptotic,
                    set.pooled.sample_count
                );
            }
            for pair in &output.pairwise {
                println!(
                    "pairwise n{} ratio {}: j0 {} vs {}: sup difference {:.4}",
                    pair.n, pair.ratio, pair.j0_a, pair.j0_b, pair.sup_difference
                );
            }
        }
        ExperimentKind::CouplingError => {
            let mut output = run_coupling_experiment(&cfg)?;
            output.summary.wall_time_seconds = Some(started.elapsed().as_secs_f64());
            write_coupling_artifacts(&out_dir, &output)?;
            for set in &output.sets {
                match &set.plateau {
                    Some(p) => println!(
                        "{}: max relative deviation {:.4}, plateau level {:.4} (target {:.4}), onset alpha {:.3} (r = {:.3})",
                        set.label(),
                        set.max_relative_deviation,
                        p.level,
                        p.target,
                        p.onset_alpha,
                        p.r
                    ),
                    None => println!(
                        "{}: max relative deviation {:.4}",
                        set.label(),
                        set.max_relative_deviation
                    ),
                }
            }
        }
    }

    println!("artifacts written to {}", out_dir.display());
    Ok(0)
}

pub fn verify(args: VerifyArgs) -> Result<i32, CliError> {
    crate::configure_threads(args.threads)?;
    let seed = resolve_seed(args.seed)?;
    let report = crate::verify::run(seed, args.fast, args.out.as_deref())?;
    print!("{}", crate::verify::render_table(&report));
    if report.passed {
        Ok(0)
    } else {
        let failing: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        eprintln!("verification failed: {}", failing.join(", "));
        Ok(3)
    }
}

/// Shared helper for writing verify artifacts into a directory.
pub fn ensure_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::Validation(format!("--out: {e}")))
}
