use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sparsecert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparsecert")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

const MATRIX: &str = r#"{"n": 2, "m": 3, "normalized": true}
1, 0, 0.6
0, 1, 0.8
"#;

#[test]
fn analyze_builtin() {
    let out = sparsecert(&["analyze", "--builtin", "identity_hadamard", "--n", "16", "--m", "32"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["coherence"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert_eq!(v["normalized"], true);
}

#[test]
fn input_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let out = sparsecert(&["analyze", "--matrix", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.csv"));

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"p": 2}"#).unwrap();
    assert_eq!(sparsecert(&["experiment", "--config", bad.to_str().unwrap()]).status.code(), Some(1));

    let out = sparsecert(&["analyze", "--builtin", "identity_dct", "--n", "8", "--m", "20"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn singular_support_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dup.csv");
    fs::write(&path, "{\"n\": 2, \"m\": 3, \"normalized\": true}\n1, 1, -1\n0, 0, 0\n").unwrap();
    let out = sparsecert(&["lwtail", "--matrix", path.to_str().unwrap(), "--p", "2", "--t", "0.5", "--trials", "10"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solve_and_certify_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("a.csv");
    fs::write(&m, MATRIX).unwrap();
    let y = dir.path().join("y.json");
    fs::write(&y, "[1.0, 0.0]").unwrap();
    let out = sparsecert(&["solve", "--matrix", m.to_str().unwrap(), "--y", y.to_str().unwrap(), "--epsilon", "0.5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["status"], "Converged");
    assert!((v["l1_norm"].as_f64().unwrap() - 0.5).abs() < 1e-9);

    let s = dir.path().join("x.json");
    fs::write(&s, r#"{"m": 3, "support": [0], "signs": [1], "magnitudes": [2.0]}"#).unwrap();
    let out = sparsecert(&["certify", "--matrix", m.to_str().unwrap(), "--signal", s.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert!((v["ic"].as_f64().unwrap() - 0.6).abs() < 1e-12);
    assert_eq!(v["fuchs_condition"], true);
}

fn run_experiment(dir: &Path, threads: &str) -> Vec<u8> {
    let cfg = dir.join("cfg.json");
    fs::write(
        &cfg,
        r#"{"matrix": {"source": "builtin", "kind": "identity_dct", "n": 32, "m": 64},
            "p": 3, "trials": 40, "root_seed": 9, "epsilon": 0.05}"#,
    )
    .unwrap();
    let out_dir = dir.join(format!("out{threads}"));
    let out = sparsecert(&[
        "experiment",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--threads",
        threads,
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["trials"], 40);
    assert_eq!(summary["schema_version"], 1);
    fs::read(out_dir.join("trials.csv")).unwrap()
}

#[test]
fn experiment_outputs_are_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_experiment(dir.path(), "1"), run_experiment(dir.path(), "3"));
}

#[test]
fn tropp_and_lwtail_json() {
    let out = sparsecert(&["tropp", "--builtin", "identity_dct", "--n", "32", "--m", "64", "--p", "3", "--trials", "200"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["gram_dominated"], true);
    let out = sparsecert(&[
        "lwtail", "--builtin", "identity_dct", "--n", "32", "--m", "64", "--p", "3", "--t", "0,10", "--trials", "200",
        "--mode", "joint",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["mode"], "joint");
    assert_eq!(v["points"][0]["empirical"], 1.0);
    assert_eq!(v["points"][1]["empirical"], 0.0);
}
