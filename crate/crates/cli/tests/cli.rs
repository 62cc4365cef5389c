use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const HEADER: &str = "t,n_mean,n2_normal,g2,entropy_nats,trace_defect,offdiag_ratio";

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_laserchan"));
    cmd.env_remove("LASERCHAN_MAX_DIM");
    cmd
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn rows(stdout: &[u8]) -> Vec<Vec<String>> {
    let text = String::from_utf8(stdout.to_vec()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(HEADER));
    lines.map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn field(row: &[String], i: usize) -> f64 {
    row[i].parse().unwrap()
}

#[test]
fn vacuum_thermalizes() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "vac.json",
        r#"{"g": 1, "kappa": 2, "t_grid": [0, 1, 2, 3, 4, 5], "initial_state": {"type": "number", "n": 0}, "out_dim": 16}"#,
    );
    let out = run(&["evolve", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = rows(&out.stdout);
    assert_eq!(rows.len(), 6);
    // vacuum has no defined g2
    assert_eq!(rows[0][3], "");
    let last = rows.last().unwrap();
    assert!((field(last, 1) - 1.0).abs() < 1e-4);
    assert!((field(last, 3) - 2.0).abs() < 1e-6);
    assert!((field(last, 4) - 1.3863).abs() < 1e-3);
    for row in &rows {
        assert!(field(row, 5) >= 0.0 && field(row, 5) <= 1e-10);
        assert!(field(row, 4) >= -1e-10);
    }
}

#[test]
fn time_zero_row_is_the_input_state() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "coh.json",
        r#"{"g": 1, "kappa": 2, "t_grid": [0], "initial_state": {"type": "coherent", "re": 1.5, "im": -0.5}, "out_dim": 8}"#,
    );
    let out = run(&["evolve", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let row = &rows(&out.stdout)[0];
    assert_eq!(field(row, 0), 0.0);
    // |z|^2 = 2.5 up to the 1e-10 constructor tail
    assert!((field(row, 1) - 2.5).abs() < 1e-8);
    assert!((field(row, 3) - 1.0).abs() < 1e-8);
    assert!(field(row, 4).abs() < 1e-8);
}

#[test]
fn starved_basis_exits_with_truncation() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "grow.json",
        r#"{"g": 2, "kappa": 1, "t_grid": [0, 0.5, 1.0], "initial_state": {"type": "coherent", "re": 2, "im": 0}, "out_dim": 16, "max_dim": 16}"#,
    );
    let out = run(&["evolve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("out_dim >="), "{err}");

    // the same run succeeds once the ceiling allows the retry to grow
    let out = bin().env("LASERCHAN_MAX_DIM", "1024").args(["evolve", "--config", cfg.to_str().unwrap()]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn environment_ceiling_overrides_default() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "grow.json",
        r#"{"g": 2, "kappa": 1, "t_grid": [1.0], "initial_state": {"type": "number", "n": 2}, "out_dim": 8}"#,
    );
    assert!(run(&["evolve", "--config", cfg.to_str().unwrap()]).status.success());
    let out = bin().env("LASERCHAN_MAX_DIM", "16").args(["evolve", "--config", cfg.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().env("LASERCHAN_MAX_DIM", "lots").args(["evolve", "--config", cfg.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn output_directory_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "mix.json",
        r#"{"g": 1.5, "kappa": 1, "t_grid": [0, 0.25, 0.5, 0.75],
            "initial_state": {"type": "coherent_mixture", "weights": [0.4, 0.6], "amps": [[1, 0], [0, -0.7]]},
            "out_dim": 32}"#,
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for target in [&a, &b] {
        let out = run(&["evolve", "--config", cfg.to_str().unwrap(), "--out", target.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(out.stdout.is_empty());
    }
    for name in ["timeseries.csv", "summary.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let csv = fs::read(a.join("timeseries.csv")).unwrap();
    let rows = rows(&csv);
    assert_eq!(rows.len(), 4);
    // a coherent mixture keeps coherences
    assert!(field(&rows[1], 6) > 0.0);
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(a.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["regime"], "gain-dominated");
    assert!(summary["g2_infinity"].as_f64().unwrap() > 1.0);
    assert_eq!(summary["dims_used"].as_array().unwrap().len(), 4);
}

#[test]
fn malformed_config_reports_location() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        "{\n  \"g\": 1,\n  \"kappa\": 2,\n  \"t_grid\": [0, \"one\"],\n  \"initial_state\": {\"type\": \"number\", \"n\": 0},\n  \"out_dim\": 8\n}\n",
    );
    let out = run(&["evolve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("t_grid"), "{err}");
    assert!(err.contains("line 4"), "{err}");

    let missing = run(&["evolve", "--config", dir.path().join("nope.json").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(1));
    let descending = write_config(
        dir.path(),
        "desc.json",
        r#"{"g": 1, "kappa": 2, "t_grid": [1, 0], "initial_state": {"type": "number", "n": 0}, "out_dim": 8}"#,
    );
    let out = run(&["evolve", "--config", descending.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("t_grid[1]"));
}

#[test]
fn validate_passes_on_a_sound_scenario() {
    let dir = TempDir::new().unwrap();
    for (name, body) in [
        ("loss", r#"{"g": 1, "kappa": 2, "t_grid": [0.1, 0.5, 1.0], "initial_state": {"type": "thermal", "nbar": 1}, "out_dim": 64}"#),
        ("balanced", r#"{"g": 1, "kappa": 1, "t_grid": [0.5, 1.0], "initial_state": {"type": "coherent", "re": 1, "im": 0}, "out_dim": 96}"#),
        ("mixture", r#"{"g": 1, "kappa": 2, "t_grid": [0.3, 1.0], "initial_state": {"type": "coherent_mixture", "weights": [0.5, 0.5], "amps": [[1, 0], [-1, 0]]}, "out_dim": 48}"#),
    ] {
        let cfg = write_config(dir.path(), &format!("{name}.json"), body);
        let out = run(&["validate", "--config", cfg.to_str().unwrap()]);
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stdout));
        let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(report["pass"], true);
        for check in report["checks"].as_array().unwrap() {
            assert!(check["max_discrepancy"].as_f64().unwrap() < 1e-6, "{name}: {check}");
        }
        let names: Vec<&str> = report["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
        assert!(names.contains(&"kraus_vs_master_equation"));
    }
}

#[test]
fn validate_diagnoses_a_starved_basis() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "tiny.json",
        r#"{"g": 2, "kappa": 1, "t_grid": [0.5, 1.0], "initial_state": {"type": "number", "n": 3}, "out_dim": 6}"#,
    );
    let out = run(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["pass"], false);
    let diag = &report["truncation"];
    assert_eq!(diag["out_dim"], 6);
    assert!(diag["suggested_out_dim"].as_u64().unwrap() > 6);
}

#[test]
fn steady_state_command() {
    let out = run(&["steady", "--g", "1", "--kappa", "2"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["n_mean"], 1.0);
    assert!((v["entropy_nats"].as_f64().unwrap() - 2.0 * std::f64::consts::LN_2).abs() < 1e-15);

    assert_eq!(run(&["steady", "--g", "2", "--kappa", "1"]).status.code(), Some(1));
    assert_eq!(run(&["steady", "--g", "-1", "--kappa", "1"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
}
