use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hypospec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypospec")).args(args).output().expect("binary runs")
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn result(report: &Value, name: &str) -> f64 {
    report["results"].as_array().unwrap().iter().find(|q| q["name"] == name).unwrap()["value"].as_f64().unwrap()
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn weyl_on_exact_torus_writes_report_and_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = hypospec(&["weyl", "--manifold", "torus2_analytic", "--out", &out_arg(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let r = report(dir.path());
    assert!((result(&r, "exponent") - 1.0).abs() < 0.05);
    assert!((result(&r, "constant") - 1.0 / (4.0 * std::f64::consts::PI)).abs() < 0.004);
    assert!(dir.path().join("data/counting.csv").exists());
    assert!(dir.path().join("report.txt").exists());
    assert!(String::from_utf8_lossy(&out.stdout).contains("summary: PASS"));
}

#[test]
fn index_of_a_row_vector() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = dir.path().join("d.csv");
    fs::write(&matrix, "1,0\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = hypospec(&["index", "--matrix", matrix.to_str().unwrap(), "--out", &out_arg(&out_dir)]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out_dir);
    assert_eq!(result(&r, "index"), 1.0);
    for t in ["0.1", "1", "10"] {
        assert_eq!(result(&r, &format!("s({t})")), 1.0);
    }
    let table = fs::read_to_string(out_dir.join("data/supertrace.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
}

#[test]
fn validate_carnot235() {
    let dir = tempfile::tempdir().unwrap();
    let out = hypospec(&["validate", "--algebra", "carnot235", "--out", &out_arg(dir.path())]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(dir.path());
    assert_eq!(result(&r, "homogeneous_dimension"), 10.0);
    assert_eq!(r["details"]["violations"].as_array().unwrap().len(), 0);
}

#[test]
fn schema_violations_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"manifold": "torus2_analytic", "resolutoin": 64}"#).unwrap();
    let out = hypospec(&["weyl", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("resolutoin"));
    // a key that belongs to another subcommand
    assert_eq!(hypospec(&["weyl", "--manifold", "torus2", "--matrix", "d.csv"]).status.code(), Some(2));
    // nonpositive tolerance
    fs::write(&cfg, r#"{"manifold": "torus2_analytic", "tolerances": {"exponent": -1}}"#).unwrap();
    assert_eq!(hypospec(&["weyl", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    // missing input file
    assert_eq!(hypospec(&["index", "--matrix", "/nonexistent/d.csv"]).status.code(), Some(2));
    // output directory below a regular file
    let out = dir.path().join("file");
    fs::write(&out, "").unwrap();
    let code = hypospec(&["validate", "--out", out.join("sub").to_str().unwrap()]).status.code();
    assert_eq!(code, Some(2));
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"manifold": "torus2_analytic", "eigen_count": 500}"#).unwrap();
    let out_dir = dir.path().join("out");
    let out = hypospec(&["weyl", "--config", cfg.to_str().unwrap(), "--eigen-count", "4000", "--out", &out_arg(&out_dir)]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out_dir);
    assert_eq!(r["config"]["eigen_count"], 4000);
    assert_eq!(r["config"]["manifold"], "torus2_analytic");
}

#[test]
fn numerical_refusal_exits_3_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let out = hypospec(&["heat", "--manifold", "torus2_analytic", "--eigen-count", "20", "--out", &out_arg(dir.path())]);
    assert_eq!(out.status.code(), Some(3));
    let r = report(dir.path());
    assert_eq!(r["status"], "refused");
    assert!(!r["diagnostics"].as_array().unwrap().is_empty());
}

#[test]
fn failed_assertion_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"manifold": "torus2_analytic", "tolerances": {"exponent": 1e-9}}"#).unwrap();
    let out = hypospec(&["weyl", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().last().unwrap().starts_with("summary: FAIL"));
    assert!(text.contains("tolerance 1e-9"));
}

#[test]
fn reports_are_deterministic() {
    let run = |dir: &Path| {
        let out = hypospec(&["zeta", "--manifold", "torus2_analytic", "--z", "2", "--z", "3+1i", "--out", &out_arg(dir)]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
        let mut r = report(dir);
        r.as_object_mut().unwrap().remove("metadata");
        r["config"].as_object_mut().unwrap().remove("out");
        (r, fs::read_to_string(dir.join("report.txt")).unwrap(), fs::read_to_string(dir.join("data/zeta.csv")).unwrap())
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = run(a.path());
    let second = run(b.path());
    assert_eq!(first.0, second.0);
    assert_eq!(first.1, second.1);
    assert_eq!(first.2, second.2);
}

#[test]
fn heisenberg_fibered_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let out = hypospec(&["spectrum", "--manifold", "heisenberg", "--N", "16", "--m-max", "2", "--out", &out_arg(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let r = report(dir.path());
    assert_eq!(result(&r, "eigenvalues"), 5.0 * 256.0);
    assert_eq!(result(&r, "kernel_dim"), 1.0);
    let csv = fs::read_to_string(dir.path().join("data/spectrum.csv")).unwrap();
    assert!(csv.starts_with("eigenvalue,multiplicity\n0e0,1\n"));
}

#[test]
fn alpha235_reports_all_cross_checks() {
    let dir = tempfile::tempdir().unwrap();
    let out = hypospec(&[
        "alpha235", "--energy-cutoff", "20", "--rel-tol", "1e-3", "--mu-min", "0.2", "--basis", "60", "--out", &out_arg(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let text = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    for name in ["refinement", "reduced_vs_direct", "hermite_vs_grid"] {
        assert!(text.contains(&format!("PASS {name}:")), "{text}");
    }
    let r = report(dir.path());
    assert!((result(&r, "alpha0") - 47.304).abs() < 0.05);
    assert!(r["details"]["convention"].as_str().unwrap().contains("alpha0"));
}
