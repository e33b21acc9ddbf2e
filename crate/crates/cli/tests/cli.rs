use std::path::Path;

use ejm_cli::{main_with_args, verify_all, EXIT_CAPACITY, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION};
use ejm_core::measurements::ejm_basis;
use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("ejm").chain(args.iter().copied());
    let code = main_with_args(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn json(args: &[&str]) -> Value {
    let (code, out, err) = run(args);
    assert_eq!(code, EXIT_OK, "{args:?}: {err}");
    serde_json::from_str(&out).unwrap()
}

fn perturbed_basis_file(dir: &Path, delta: f64) -> String {
    let mut file: Value = serde_json::from_str(&ejm_basis().to_json().unwrap()).unwrap();
    let re = file["states"][0][0][0].as_f64().unwrap();
    file["states"][0][0][0] = Value::from(re + delta);
    let path = dir.join("basis.json");
    std::fs::write(&path, serde_json::to_string(&file).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn triangle_reports_dyadic_pattern_values() {
    let v = json(&["triangle", "--basis", "ejm"]);
    let probs = v["probabilities"].as_array().unwrap();
    assert_eq!(probs.len(), 64);
    let aaa = probs
        .iter()
        .filter(|e| e["dyadic"]["num"] == 25 && e["dyadic"]["log2den"] == 8)
        .count();
    assert_eq!(aaa, 4);
    let total: f64 = probs.iter().map(|e| e["p"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn table2_csv_has_ten_rows() {
    let (code, out, _) = run(&["table2", "--max-n", "10", "--format", "csv"]);
    assert_eq!(code, EXIT_OK);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 11);
    assert!(lines[1].starts_with("1,"));
    assert!(lines[10].contains("262087"));
    assert!(lines[10].contains("32761"));
}

#[test]
fn qmodel_scan_peaks_at_one_half() {
    let v = json(&["qmodel", "--scan", "0:1:0.25"]);
    let text = v.to_string();
    assert!(text.contains("0.23828125"), "{text}");
    let s = serde_json::to_string(&v).unwrap();
    assert!(s.contains("\"bits\""));
}

#[test]
fn chain_events_match_table() {
    let v = json(&["line", "--n", "4", "--event", "all-equal"]);
    let p = v["p"].as_f64().unwrap();
    assert!((p - 97.0 / 1024.0).abs() < 1e-12, "{v}");
    let v = json(&["polygon", "--n", "10", "--event", "all-equal"]);
    let p = v["p"].as_f64().unwrap();
    assert!((p - 32761.0 / 16777216.0).abs() < 1e-12, "{v}");
}

#[test]
fn verify_all_passes_at_default_tolerance() {
    let (code, out, err) = run(&["verify-all"]);
    assert_eq!(code, EXIT_OK, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["failed"], 0);
    assert!(v["passed"].as_u64().unwrap() > 50);
}

#[test]
fn verify_all_fails_at_impossible_tolerance() {
    let (code, out, _) = run(&["verify-all", "--tol", "1e-20"]);
    assert_eq!(code, EXIT_VALIDATION);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!(v["failed"].as_u64().unwrap() > 0);
}

#[test]
fn perturbed_basis_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let path = perturbed_basis_file(dir.path(), 1e-3);
    let (code, out, _) = run(&["validate", "--basis-file", &path]);
    assert_eq!(code, EXIT_VALIDATION, "{out}");
    let (code, out, _) = run(&["verify-all", "--basis-file", &path]);
    assert_eq!(code, EXIT_VALIDATION);
    let v: Value = serde_json::from_str(&out).unwrap();
    let gram = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "EJM Gram matrix equals identity")
        .unwrap();
    assert_eq!(gram["passed"], false);
}

#[test]
fn unperturbed_basis_file_validates() {
    let dir = tempfile::tempdir().unwrap();
    let path = perturbed_basis_file(dir.path(), 0.0);
    let (code, _, err) = run(&["validate", "--basis-file", &path]);
    assert_eq!(code, EXIT_OK, "{err}");
}

#[test]
fn verify_all_library_summary() {
    let s = verify_all(1e-9, &ejm_basis());
    assert!(s.all_passed());
    assert_eq!(s.passed, s.checks.len());
    assert_eq!(s.anchors.iter().map(|a| a.passed).sum::<usize>(), s.passed);
}

#[test]
fn output_is_deterministic() {
    for args in [
        &["triangle"][..],
        &[
            "search",
            "--mode",
            "anneal",
            "--cardinality",
            "2",
            "--steps",
            "2000",
        ][..],
        &["stats", "--topology", "line", "--n", "4", "--format", "csv"][..],
    ] {
        let a = run(args);
        let b = run(args);
        assert_eq!(a.0, EXIT_OK, "{args:?}: {}", a.2);
        assert_eq!(a.1, b.1);
    }
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("asym.json");
    let (code, out, _) = run(&["asym", "--out", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(out.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert!(v.is_object());
}

#[test]
fn capacity_errors_exit_two() {
    assert_eq!(run(&["polygon", "--n", "9"]).0, EXIT_CAPACITY);
    assert_eq!(run(&["search", "--cardinality", "3"]).0, EXIT_CAPACITY);
}

#[test]
fn usage_errors_exit_sixty_four() {
    assert_eq!(run(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(run(&["triangle", "--basis", "nope"]).0, EXIT_USAGE);
    assert_eq!(run(&["line"]).0, EXIT_USAGE);
    assert_eq!(run(&["--help"]).0, EXIT_OK);
}

#[test]
fn bell_check_verdicts() {
    let v = json(&["bell-check", "--target", "ejm-line"]);
    assert_eq!(v["verdict"], "LOCAL", "{v}");
    let (code, out, _) = run(&["bell-check", "--target", "pr-box"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["verdict"], "NONLOCAL");
    assert_eq!(code, EXIT_OK);
}
