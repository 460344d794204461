use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn ptgame(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptgame"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn exact_solve_prints_ratios() {
    for (file, value) in [("m1.model", "1/1"), ("m1x.model", "2/1"), ("m2.model", "2/1"), ("m3.model", "3/2")] {
        let out = ptgame(&["solve", "--exact", path(&fixture(file))]);
        assert_eq!(out.status.code(), Some(0), "{file}");
        let doc = json(&out);
        assert_eq!(doc["initial_value"], value, "{file}");
        assert_eq!(doc["certified"], true);
    }
}

#[test]
fn unreachable_target_exits_3() {
    let out = ptgame(&["solve", path(&fixture("m2-unreachable.model"))]);
    assert_eq!(out.status.code(), Some(3));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "assumption");
    assert_eq!(err["detail"]["kind"], "end_component");
}

#[test]
fn bad_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.model");
    std::fs::write(&bad, "clocks = [\"c\"]\nk = 0\n").unwrap();
    assert_eq!(ptgame(&["validate", path(&bad)]).status.code(), Some(2));
    assert_eq!(ptgame(&["solve", path(&bad)]).status.code(), Some(2));
    let m2 = fixture("m2.model");
    assert_eq!(ptgame(&["discounted", "--lambda", "1", path(&m2)]).status.code(), Some(2));
    assert_eq!(ptgame(&["simulate", "--runs", "0", path(&m2)]).status.code(), Some(2));
    assert_eq!(ptgame(&["solve", "--method", "nope", path(&m2)]).status.code(), Some(2));
    assert_eq!(ptgame(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn state_cap_exits_4() {
    let out = ptgame(&["brg", "--state-cap", "1", path(&fixture("m3.model"))]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn discounted_m2() {
    let out = ptgame(&["discounted", "--lambda", "1/2", path(&fixture("m2.model"))]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["initial_value"], "2/3");
}

#[test]
fn dot_export_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.dot");
    let b = dir.path().join("b.dot");
    let m3 = fixture("m3.model");
    for p in [&a, &b] {
        assert_eq!(ptgame(&["brg", "--dot", path(p), path(&m3)]).status.code(), Some(0));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert!(text.starts_with("digraph"));
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("est.csv");
    let trace = dir.path().join("trace.txt");
    let m2 = fixture("m2.model");
    let args = ["simulate", "--runs", "500", "--seed", "9", path(&m2)];
    let first = ptgame(&args);
    let second = ptgame(&["--threads", "2", "simulate", "--runs", "500", "--seed", "9", "--csv", path(&csv), "--trace", path(&trace), path(&m2)]);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(json(&first)["estimate"], json(&second)["estimate"]);
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("runs,reached,mean"));
    assert!(!std::fs::read_to_string(&trace).unwrap().is_empty());
}

#[test]
fn property_check_passes_on_m2() {
    let out = ptgame(&["check-properties", "--pairs", "20", path(&fixture("m2.model"))]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["pass"], true);
}

#[test]
fn methods_are_listed() {
    let out = ptgame(&["solve", "--list-methods", "unused"]);
    let names: Vec<String> = json(&out)["methods"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["name"].as_str().unwrap().to_string())
        .collect();
    for n in ["exact", "exact-max-first", "value-iteration", "discounted", "ta-simple"] {
        assert!(names.iter().any(|x| x == n), "{n} missing from {names:?}");
    }
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out_file = dir.path().join("sol.json");
    let out = ptgame(&["solve", "--method", "ta-simple", "--out", path(&out_file), path(&fixture("m1.model"))]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out_file).unwrap()).unwrap();
    assert_eq!(doc["initial_value"], "1/1");
}
