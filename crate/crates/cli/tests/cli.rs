//! End-to-end tests of the CLI surface: flag validation and exit codes,
//! output formats, the RMT_SEED override, and rerun determinism.

use std::process::{Command, Output};

fn normeig(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_normeig"))
        .args(args)
        .env_remove("RMT_SEED")
        .output()
        .expect("spawn normeig")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr_str(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

#[test]
fn theory_cdf_emits_the_finite_size_curve() {
    let out = normeig(&[
        "theory-cdf",
        "--n",
        "100",
        "--j0",
        "1",
        "--j1",
        "0.3",
        "--grid-step",
        "0.001",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_str(&out));
    let body = stdout_str(&out);
    let lines: Vec<&str> = body.lines().collect();
    assert_eq!(lines[0], "x,cdf_finite,cdf_asymptotic");
    assert_eq!(lines.len(), 1 + 1001, "0.001 grid spans 1001 points");

    let first: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(first[0], 0.0);
    assert!((first[1] - 0.01).abs() < 1e-12, "cdf_finite(0) = 1/n");
    let last: Vec<f64> = lines[1001].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(last[0], 1.0);
    assert_eq!(last[1], 1.0);
    assert_eq!(last[2], 1.0);
}

#[test]
fn theory_cdf_rejects_small_n() {
    let out = normeig(&["theory-cdf", "--n", "2", "--j0", "1", "--j1", "0.3"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_str(&out);
    assert!(err.contains("--n"), "message should name the flag: {err}");
    assert!(err.contains('3'), "message should cite the minimum: {err}");
}

#[test]
fn unknown_flag_exits_with_usage_error() {
    let out = normeig(&["theory-cdf", "--bogus", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_str(&out).contains("--bogus"));
}

#[test]
fn unknown_subcommand_exits_with_usage_error() {
    let out = normeig(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn j1_and_ratio_are_mutually_exclusive() {
    let out = normeig(&[
        "sample", "--n", "10", "--j0", "1", "--j1", "0.3", "--ratio", "0.3",
    ]);
    assert_eq!(out.status.code(), Some(1));

    let out = normeig(&["sample", "--n", "10", "--j0", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_str(&out);
    assert!(err.contains("--j1") && err.contains("--ratio"), "{err}");
}

#[test]
fn alpha_and_rank_are_validated() {
    let out = normeig(&[
        "coupling-error",
        "--n",
        "10",
        "--j0",
        "1",
        "--j1",
        "0.3",
        "--alpha",
        "1.5",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_str(&out).contains("--alpha"));

    let out = normeig(&[
        "factorize", "--n", "10", "--j0", "1", "--j1", "0.3", "--rank", "11",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_str(&out).contains("--rank"));
}

#[test]
fn sample_is_deterministic_and_seeded() {
    let args = [
        "sample", "--n", "12", "--j0", "1", "--j1", "0.4", "--seed", "5",
    ];
    let a = normeig(&args);
    let b = normeig(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout_str(&a), stdout_str(&b));

    let c = normeig(&[
        "sample", "--n", "12", "--j0", "1", "--j1", "0.4", "--seed", "6",
    ]);
    assert_ne!(stdout_str(&a), stdout_str(&c));

    // Spectrum rows are descending with normalized endpoints 1 and 0.
    let body = stdout_str(&a);
    let rows: Vec<Vec<f64>> = body
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 12);
    assert_eq!(rows[0][2], 1.0);
    assert_eq!(rows[11][2], 0.0);
    assert!(rows.windows(2).all(|w| w[0][1] >= w[1][1]));
}

#[test]
fn rmt_seed_env_is_used_and_flag_wins() {
    let base = ["sample", "--n", "10", "--j0", "1", "--j1", "0.4"];
    let with_env = Command::new(env!("CARGO_BIN_EXE_normeig"))
        .args(base)
        .env("RMT_SEED", "9")
        .output()
        .unwrap();
    let with_flag = normeig(&[
        "sample", "--n", "10", "--j0", "1", "--j1", "0.4", "--seed", "9",
    ]);
    assert_eq!(stdout_str(&with_env), stdout_str(&with_flag));

    // The flag overrides the environment.
    let flag_and_env = Command::new(env!("CARGO_BIN_EXE_normeig"))
        .args([
            "sample", "--n", "10", "--j0", "1", "--j1", "0.4", "--seed", "3",
        ])
        .env("RMT_SEED", "9")
        .output()
        .unwrap();
    let flag_only = normeig(&[
        "sample", "--n", "10", "--j0", "1", "--j1", "0.4", "--seed", "3",
    ]);
    assert_eq!(stdout_str(&flag_and_env), stdout_str(&flag_only));

    let bad_env = Command::new(env!("CARGO_BIN_EXE_normeig"))
        .args(base)
        .env("RMT_SEED", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(bad_env.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad_env.stderr).contains("RMT_SEED"));
}

#[test]
fn factorize_full_rank_has_negligible_residual() {
    let out = normeig(&[
        "factorize", "--n", "15", "--j0", "1", "--j1", "0.5", "--rank", "15",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let body = stdout_str(&out);
    let row: Vec<&str> = body.lines().nth(1).unwrap().split(',').collect();
    let residual: f64 = row[6].parse().unwrap();
    let frobenius: f64 = row[8].parse().unwrap();
    assert!(residual <= 1e-8 * frobenius);
}

#[test]
fn experiment_writes_deterministic_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out_dir in [&out_a, &out_b] {
        let out = normeig(&[
            "experiment",
            "--kind",
            "cdf-scaling",
            "--seed",
            "11",
            "--trials",
            "2",
            "--n",
            "20",
            "--j0",
            "1",
            "--ratio",
            "0.3",
            "--grid-step",
            "0.05",
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_str(&out));
    }

    let csvs: Vec<String> = std::fs::read_dir(&out_a)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(csvs.iter().any(|f| f.ends_with(".csv")));
    assert!(csvs.iter().any(|f| f.ends_with("_summary.json")));

    for file in csvs.iter().filter(|f| f.ends_with(".csv")) {
        let a = std::fs::read(out_a.join(file)).unwrap();
        let b = std::fs::read(out_b.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs across reruns");
    }
}

#[test]
fn experiment_requires_out_directory() {
    let out = normeig(&["experiment", "--kind", "cdf-scaling"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_str(&out).contains("--out"));
}

#[test]
fn verify_fast_passes_quickly() {
    let start = std::time::Instant::now();
    let out = normeig(&["verify", "--fast"]);
    let elapsed = start.elapsed();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_str(&out));
    let body = stdout_str(&out);
    assert!(body.contains("all checks passed"), "{body}");
    assert!(elapsed < std::time::Duration::from_secs(5));
}

#[test]
fn verify_reports_are_identical_across_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out_dir in [&out_a, &out_b] {
        let out = normeig(&[
            "verify",
            "--fast",
            "--seed",
            "4",
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    let a = std::fs::read(out_a.join("verify_report.json")).unwrap();
    let b = std::fs::read(out_b.join("verify_report.json")).unwrap();
    assert_eq!(a, b);
}
