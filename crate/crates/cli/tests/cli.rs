use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn opdiff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opdiff"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr is JSON")
}

#[test]
fn norm_of_linear_symbol() {
    let spec = data("dbz.json");
    let out = opdiff(&[
        "norm",
        "--spec",
        spec.to_str().unwrap(),
        "--alpha",
        "-1",
        "--trunc",
        "256",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert!((v["exact"].as_f64().unwrap() - 1.0).abs() <= 1e-6);
    assert!((v["numeric"].as_f64().unwrap() - 1.0).abs() <= 1e-6);
    assert!(v["lower"].as_f64().unwrap() <= v["numeric"].as_f64().unwrap() + 1e-9);
}

#[test]
fn radius_matches_golden() {
    let spec = data("dz.json");
    let out = opdiff(&["radius", "--spec", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let golden = std::fs::read(data("radius_dz.golden.json")).unwrap();
    assert_eq!(out.stdout, golden);
    let v = stdout_json(&out);
    assert_eq!(v["radius"].as_f64(), Some(1.0));
    assert_eq!(v["l_star"].as_u64(), Some(2));
}

#[test]
fn matrix_csv_matches_golden() {
    let spec = data("triangular.json");
    let out = opdiff(&[
        "matrix",
        "--spec",
        spec.to_str().unwrap(),
        "--trunc",
        "8",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        out.stdout,
        std::fs::read(data("matrix_triangular.golden.csv")).unwrap()
    );
}

#[test]
fn output_is_deterministic_and_written_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = data("triangular.json");
    let spec = spec.to_str().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let out = opdiff(&[
            "spectrum",
            "--spec",
            spec,
            "--trunc",
            "64",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        assert!(out.stdout.is_empty());
    }
    let first = std::fs::read(&a).unwrap();
    assert_eq!(first, std::fs::read(&b).unwrap());
    let v: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(v["closed_form"]["radius_closed"].as_f64(), Some(1.0));
}

#[test]
fn default_suite_passes() {
    let out = opdiff(&["verify", "--suite", "default"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    let reports = v.as_array().unwrap();
    assert!(!reports.is_empty());
    assert!(reports.iter().all(|r| r["pass"] == Value::Bool(true)));
    assert!(reports.iter().all(|r| r.get("runtime_ms").is_none()));
}

#[test]
fn verification_failure_exits_two() {
    let suite = data("failing_suite.json");
    let out = opdiff(&[
        "verify",
        "--suite",
        suite.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("case,tag,residual,tol,pass\n"));
    assert!(text.contains("too-small,reproducing,,0.0,false"));
}

#[test]
fn hypothesis_violation_exits_one() {
    let spec = data("dbz.json");
    let out = opdiff(&["radius", "--spec", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let e = stderr_json(&out);
    assert_eq!(e["error"]["kind"], "hypothesis");
    assert!(e["error"]["message"]
        .as_str()
        .unwrap()
        .contains("must vanish"));
}

#[test]
fn schema_errors_exit_one() {
    for (file, kind) in [
        ("unknown_field.json", "schema"),
        ("not_self_map.json", "schema"),
    ] {
        let spec = data(file);
        let out = opdiff(&["matrix", "--spec", spec.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(1), "{file}");
        assert_eq!(stderr_json(&out)["error"]["kind"], kind);
    }
    let out = opdiff(&["norm"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"]["kind"], "invalid_argument");
}

#[test]
fn bad_flags_exit_one() {
    let spec = data("dz.json");
    let spec = spec.to_str().unwrap();
    assert_eq!(
        opdiff(&["matrix", "--spec", spec, "--trunc", "4"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        opdiff(&["matrix", "--spec", spec, "--trunc", "4096"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        opdiff(&["norm", "--spec", spec, "--tol", "0"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(opdiff(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn bounds_sweep_table() {
    let out = opdiff(&[
        "bounds", "--b-grid", "0.5,0.9", "--n-grid", "1,2", "--trunc", "256", "--format", "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    for row in &rows {
        let lower: f64 = row[2].parse().unwrap();
        let upper: f64 = row[3].parse().unwrap();
        let exact: f64 = row[4].parse().unwrap();
        let numeric: f64 = row[5].parse().unwrap();
        assert!(lower <= exact + 1e-9 && exact <= upper + 1e-9);
        assert!((numeric - exact).abs() <= 1e-6);
    }
}

#[test]
fn thread_count_env() {
    let out = Command::new(env!("CARGO_BIN_EXE_opdiff"))
        .args([
            "verify",
            "--suite",
            data("failing_suite.json").to_str().unwrap(),
        ])
        .env("OPDIFF_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let bad = Command::new(env!("CARGO_BIN_EXE_opdiff"))
        .args(["verify"])
        .env("OPDIFF_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn report_sections() {
    let spec = data("dbz.json");
    let out = opdiff(&["report", "--spec", spec.to_str().unwrap(), "--trunc", "64"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["radius"]["unavailable"]["kind"], "hypothesis");
    assert!(v["norm"]["numeric"].as_f64().is_some());
}
