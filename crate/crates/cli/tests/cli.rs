//! Black-box tests of the binary: exit codes, artifact layout,
//! reproducibility.

use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fraclt"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("exp.toml");
    fs::write(&path, body).unwrap();
    path
}

const SMALL_SIM: &str = r#"
[process]
kind = "fbm"
tau = 0.5
horizon = 1.0
n_steps = 64
sampler = "circulant"

[experiment]
replicates = 3
master_seed = 42
"#;

#[test]
fn constants_prints_the_brownian_anchor() {
    let out = bin().args(["constants", "--tau", "0.5"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let fbm_line = text.lines().find(|l| l.contains(",fbm,")).unwrap();
    let fields: Vec<&str> = fbm_line.split(',').collect();
    let delta: f64 = fields[2].parse().unwrap();
    let theta0: f64 = fields[3].parse().unwrap();
    let limsup_hi: f64 = fields[8].parse().unwrap();
    assert!((delta - 1.0).abs() < 1e-10);
    assert!((theta0 - 1.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-10);
    assert!((limsup_hi - 2f64.sqrt()).abs() < 1e-10);
}

#[test]
fn circulant_with_odd_steps_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
[process]
kind = "fbm"
tau = 0.5
horizon = 1.0
n_steps = 24
sampler = "circulant"
"#,
    );
    let out = bin()
        .args(["simulate", "--config", cfg.to_str().unwrap()])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("power-of-two"), "stderr: {err}");
}

#[test]
fn unknown_check_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
[process]
kind = "fbm"
tau = 0.5
horizon = 1.0
n_steps = 64
sampler = "circulant"

[experiment]
checks = ["definitely_not_a_check"]
"#,
    );
    let out = bin()
        .args(["verify", "--config", cfg.to_str().unwrap()])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_lambda_ladder_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
[process]
kind = "fbm"
tau = 0.5
horizon = 1.0
n_steps = 64
sampler = "circulant"

[experiment]
lambda_ladder = [2.0, 4.0]
"#,
    );
    let out = bin()
        .args(["simulate", "--config", cfg.to_str().unwrap()])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_writes_one_csv_per_replicate_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_SIM);
    for out_name in ["a", "b"] {
        let st = bin()
            .args([
                "simulate",
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out_name,
            ])
            .current_dir(dir.path())
            .status()
            .unwrap();
        assert!(st.success());
    }
    for r in 0..3 {
        let a = fs::read(dir.path().join(format!("a/path_{r:04}.csv"))).unwrap();
        let b = fs::read(dir.path().join(format!("b/path_{r:04}.csv"))).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "replicate {r} differs between runs");
    }
    // Header and row count.
    let text = fs::read_to_string(dir.path().join("a/path_0000.csv")).unwrap();
    assert!(text.starts_with("t,value\n"));
    assert_eq!(text.lines().count(), 1 + 65);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_SIM);
    let run = |seed: &str, out: &str| {
        let st = bin()
            .args([
                "simulate",
                "--config",
                cfg.to_str().unwrap(),
                "--seed",
                seed,
                "--out",
                out,
            ])
            .current_dir(dir.path())
            .status()
            .unwrap();
        assert!(st.success());
    };
    run("1", "s1");
    run("2", "s2");
    let a = fs::read(dir.path().join("s1/path_0000.csv")).unwrap();
    let b = fs::read(dir.path().join("s2/path_0000.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn verify_with_empty_check_list_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_SIM);
    let out = bin()
        .args(["verify", "--config", cfg.to_str().unwrap()])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("out/summary.txt").exists());
}

#[test]
fn localtime_emits_field_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_SIM);
    let st = bin()
        .args(["localtime", "--config", cfg.to_str().unwrap()])
        .current_dir(dir.path())
        .status()
        .unwrap();
    assert!(st.success());
    let field = fs::read_to_string(dir.path().join("out/localtime_field.csv")).unwrap();
    assert!(field.starts_with("x,t,L\n"));
    let meta = fs::read_to_string(dir.path().join("out/localtime_field_meta.txt")).unwrap();
    assert!(meta.contains("estimator = eps_occupation"));
    assert!(meta.contains("process = fbm"));
}

#[test]
fn full_brownian_suite_exits_zero() {
    // Every registered check on the Brownian configuration must pass and
    // the process must exit 0.
    let dir = tempfile::tempdir().unwrap();
    let checks: Vec<String> = fraclt::checks::CHECK_NAMES
        .iter()
        .map(|n| format!("\"{n}\""))
        .collect();
    let cfg = write_config(
        dir.path(),
        &format!(
            r#"
[process]
kind = "fbm"
tau = 0.5
horizon = 1.0
n_steps = 16384
sampler = "circulant"

[function]
id = "gaussian_bump"
params = [1.0, 0.0, 0.5]

[experiment]
replicates = 1000
master_seed = 271_828
lambda_ladder = [1.0, 4.0, 16.0, 64.0]
checks = [{}]
"#,
            checks.join(", ")
        ),
    );
    let out = bin()
        .args(["verify", "--config", cfg.to_str().unwrap()])
        .current_dir(dir.path())
        .output()
        .unwrap();
    let summary = String::from_utf8(out.stdout.clone()).unwrap();
    assert!(
        out.status.success(),
        "full suite failed (exit {:?}):\n{summary}\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(
        !summary.contains(": FAIL"),
        "summary has failures:\n{summary}"
    );
    assert!(summary.lines().count() >= fraclt::checks::CHECK_NAMES.len());
    // The strong-approximation check also leaves its residual ensemble.
    let residuals = fs::read_to_string(dir.path().join("out/residual_ensemble.csv")).unwrap();
    assert!(residuals.starts_with("replicate,t,J\n"));
    assert!(residuals.lines().count() > 100);
}

#[test]
fn limit_subcommand_emits_ladder_and_passes_on_brownian() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
[process]
kind = "fbm"
tau = 0.5
horizon = 1.0
n_steps = 512
sampler = "circulant"

[function]
id = "compact_bump"
params = [1.0, 0.0, 1.0]

[experiment]
replicates = 1000
master_seed = 80111
lambda_ladder = [1.0, 4.0, 16.0, 64.0]
"#,
    );
    let out = bin()
        .args(["limit", "--config", cfg.to_str().unwrap()])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "limit failed: {}",
        String::from_utf8_lossy(&out.stdout)
    );
    let ladder = fs::read_to_string(dir.path().join("out/limit_ladder.csv")).unwrap();
    assert!(ladder.starts_with("lambda,ks_distance\n"));
    assert_eq!(ladder.lines().count(), 5);
    let summary = String::from_utf8(out.stdout).unwrap();
    assert!(summary.contains("first_order_limit_fbm: PASS"), "{summary}");
}

#[test]
fn lil_subcommand_reports_band_and_paired_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
[process]
kind = "fbm"
tau = 0.5
horizon = 1.0
n_steps = 512
sampler = "circulant"

[function]
id = "gaussian_bump"
params = [1.0, 0.0, 0.5]

[experiment]
replicates = 150
master_seed = 100113
"#,
    );
    let out = bin()
        .args(["lil", "--config", cfg.to_str().unwrap()])
        .current_dir(dir.path())
        .output()
        .unwrap();
    let summary = String::from_utf8(out.stdout.clone()).unwrap();
    assert!(out.status.success(), "lil failed:\n{summary}");
    assert!(summary.contains("lil_band_fbm_0.5:"), "{summary}");
    assert!(summary.contains("lil_paired_fbm_0.5: PASS"), "{summary}");
    let reports = fs::read_to_string(dir.path().join("out/lil_reports.csv")).unwrap();
    assert!(reports.starts_with("name,statistic,threshold,decision,p_value,n"));
}

#[test]
fn unsupported_format_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_SIM);
    let out = bin()
        .args([
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--format",
            "json",
        ])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
