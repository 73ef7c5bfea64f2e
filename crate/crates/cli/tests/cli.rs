use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lienard-lab"))
        .args(args)
        .env_remove("LIENARD_LAB_THREADS")
        .output()
        .expect("binary runs")
}

fn json_file(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

const QUINTIC: &str = "0.8,0,-1.3333333333333333,0,0.32";

#[test]
fn bound_prints_both_bounds() {
    let out = lab(&["bound", "--coeffs=-1,0,0.3333333333333333"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["bounds"]["degree_bound"], 5);
    assert_eq!(v["bounds"]["partition_bound"], 3);
}

#[test]
fn partition_of_the_quintic() {
    let out = lab(&["partition", "--coeffs", QUINTIC]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let cps: Vec<f64> = v["critical_points"].as_array().unwrap().iter().map(|c| c.as_f64().unwrap()).collect();
    assert_eq!(cps.len(), 2);
    assert!((cps[0] - 0.4682).abs() < 1e-3 && (cps[1] - 1.5102).abs() < 1e-3);
    assert_eq!(v["intervals"].as_array().unwrap().len(), 3);
}

#[test]
fn invalid_input_exits_2() {
    assert_eq!(lab(&["bound"]).status.code(), Some(2));
    assert_eq!(lab(&["bound", "--coeffs", "1,0"]).status.code(), Some(2));
    assert_eq!(lab(&["analyze", "--coeffs", "1", "--grid", "1"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"input_kind": "F", "coefficients": [1.0], "typo": 1}"#).unwrap();
    assert_eq!(lab(&["bound", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(lab(&["bound", "--config", "/nonexistent/cfg.json"]).status.code(), Some(2));
}

#[test]
fn bad_thread_count_exits_2() {
    let out = Command::new(env!("CARGO_BIN_EXE_lienard-lab"))
        .args(["bound", "--coeffs", "1"])
        .env("LIENARD_LAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_3_with_partial_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    // F = -x^3 blows up in finite time from most amplitudes.
    let out = lab(&["analyze", "--coeffs=0,0,-1", "--grid", "40", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let v = json_file(&path);
    assert!(!v["failures"].as_array().unwrap().is_empty());
    assert_eq!(v["bounds"]["degree_bound"], 5);
}

#[test]
fn analyze_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for p in [&a, &b] {
        let out = lab(&["analyze", "--coeffs", QUINTIC, "--out", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let v = json_file(&a);
    assert_eq!(v["schema"], "lienard-lab/1");
    assert_eq!(v["cycles"].as_array().unwrap().len(), 2);
    assert_eq!(v["lemma2_consistent"], true);
}

#[test]
fn sequential_flag_gives_the_same_report() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    lab(&["analyze", "--coeffs=-1,0,0.3333333333333333", "--out", a.to_str().unwrap()]);
    lab(&["analyze", "--coeffs=-1,0,0.3333333333333333", "--sequential", "--out", b.to_str().unwrap()]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn empty_cycle_report() {
    let out = lab(&["analyze", "--coeffs", "1,0,1"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["cycles"].as_array().unwrap().is_empty());
    assert!(v["failures"].as_array().unwrap().is_empty());
    assert_eq!(v["center_detected"], false);
}

#[test]
fn cycles_and_csv_dump() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("csv");
    let out = lab(&["cycles", "--coeffs=-1,0,0.3333333333333333", "--csv-dir", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let cycles = v["cycles"].as_array().unwrap();
    assert_eq!(cycles.len(), 1);
    assert_eq!(cycles[0]["stability"], "stable");
    let text = std::fs::read_to_string(csv.join("cycle_0.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("t,x,y"));
    assert!(text.lines().count() > 10);
}

#[test]
fn analyze_csv_dump() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(&["analyze", "--coeffs=-1,0,0.3333333333333333", "--csv-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let mut names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(names.contains(&"cycle_0_orbit.csv".to_string()));
    let lower = names.iter().find(|n| n.ends_with("_lower.csv")).expect("a lower branch");
    let text = std::fs::read_to_string(dir.path().join(lower)).unwrap();
    assert_eq!(text.lines().next(), Some("x,phi"));
}

#[test]
fn phi_finds_the_van_der_pol_amplitude() {
    let out = lab(&["phi", "--coeffs=-1,0,0.3333333333333333"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let amps: Vec<f64> = v["scans"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|s| s["candidates"].as_array().unwrap().iter().map(|c| c["A"].as_f64().unwrap()))
        .collect();
    assert_eq!(amps.len(), 1);
    assert!((amps[0] - 2.0086).abs() < 1e-3);
}

#[test]
fn fprime_flag_reads_the_derivative() {
    let out = lab(&["bound", "--fprime", "--coeffs=-1,0,1"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["bounds"]["n"], 3);
}

#[test]
fn config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"input_kind": "F", "coefficients": [1.0, 0.0, 1.0], "grid_n": 30}"#).unwrap();
    let out = lab(&["analyze", "--config", cfg.to_str().unwrap(), "--a-hi", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["scan"]["grid_n"], 30);
    assert_eq!(v["scan"]["a_hi"].as_f64(), Some(3.0));
}
