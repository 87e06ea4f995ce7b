use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qfib(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qfib"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn entry(v: &serde_json::Value, key: &str) -> f64 {
    v[key][0][0].as_f64().unwrap()
}

// trace one, eigenvalues 1.5 and -0.5
const NON_PSD_MODEL: &str = r#"{
    "type": "polynomial", "dim": 2, "params": 1,
    "c0": [[[1.5,0],[0,0]],[[0,0],[-0.5,0]]],
    "linear": [[[[0,0],[0,0]],[[0,0],[0,0]]]],
    "quadratic": []
}"#;

fn write_model(dir: &Path, text: &str) -> String {
    let path = dir.join("model.json");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn compute_paper_example_at_origin() {
    let o = qfib(&["compute", "--model", "builtin:paper-example", "--x", "0"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["schema"], 1);
    assert_eq!(entry(&v, "fisher"), 0.0);
    assert!((entry(&v, "four_g") - 4.0).abs() <= 1e-3);
    assert!(entry(&v, "four_h") <= 1e-6);
    assert!((entry(&v, "correction") - 4.0).abs() <= 1e-6);
    assert_eq!(v["crb"]["bound"]["kind"], "unbounded");
}

#[test]
fn compute_paper_example_full_rank() {
    let o = qfib(&["compute", "--model", "builtin:paper-example", "--x", "0.5"]);
    assert!(o.status.success());
    let v = json(&o);
    let exact = 4.0 + 4.0 / 3.0;
    assert!((entry(&v, "fisher") - exact).abs() <= 1e-8);
    assert!((entry(&v, "four_h") - exact).abs() <= 1e-4 * exact);
    assert!((entry(&v, "four_g") - exact).abs() <= 1e-3 * exact);
}

#[test]
fn compute_constant_model() {
    let o = qfib(&["compute", "--model", "builtin:constant", "--x", "0.3"]);
    assert!(o.status.success());
    let v = json(&o);
    for key in ["fisher", "four_g", "four_h", "correction"] {
        assert_eq!(entry(&v, key), 0.0, "{key}");
    }
    assert_eq!(v["crb"]["bound"]["kind"], "unbounded");
}

#[test]
fn floats_have_seventeen_digits() {
    let o = qfib(&["compute", "--x", "0.5"]);
    let text = stdout(&o);
    assert!(text.contains("\"eps\": 1.0000000000000000e-4"), "{text}");
}

#[test]
fn sweep_golden_header() {
    let o = qfib(&[
        "sweep",
        "--model",
        "builtin:paper-example",
        "--lo",
        "-0.5",
        "--hi",
        "0.5",
        "--steps",
        "2",
        "--format",
        "csv",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("x,fisher,four_g,four_h,correction,eq5_residual,thm1_residual")
    );
    assert_eq!(lines.count(), 2);
}

#[test]
fn sweep_correction_peaks_at_rank_change() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = qfib(&[
        "sweep",
        "--model",
        "builtin:paper-example",
        "--lo",
        "-0.5",
        "--hi",
        "0.5",
        "--steps",
        "101",
        "--format",
        "csv",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let mut reader = csv::Reader::from_path(&out).unwrap();
    let rows: Vec<Vec<f64>> = reader
        .records()
        .map(|r| r.unwrap().iter().map(|s| s.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 101);
    let gap = |r: &Vec<f64>| r[2] - r[3];
    let peak = rows.iter().max_by(|a, b| gap(a).total_cmp(&gap(b))).unwrap();
    assert_eq!(peak[0], 0.0);
    assert!((gap(peak) - 4.0).abs() < 1e-3);
}

#[test]
fn sweep_bloch_linear_closed_form() {
    let o = qfib(&[
        "sweep",
        "--model",
        "builtin:bloch-linear",
        "--lo",
        "-0.9",
        "--hi",
        "0.9",
        "--steps",
        "19",
        "--format",
        "csv",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    for r in reader.records() {
        let r = r.unwrap();
        let x: f64 = r[0].parse().unwrap();
        let fisher: f64 = r[1].parse().unwrap();
        assert!((fisher - 1.0 / (1.0 - x * x)).abs() <= 1e-6);
    }
}

#[test]
fn sweep_outside_domain_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = qfib(&[
        "sweep",
        "--model",
        "builtin:bloch-linear",
        "--lo",
        "-0.5",
        "--hi",
        "1.5",
        "--steps",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!(err["message"].as_str().unwrap().contains("grid point"));
}

#[test]
fn verify_theorem1_and_lemma3_seed_7() {
    for suite in ["theorem1", "lemma3"] {
        let o = qfib(&["verify", "--suite", suite, "--seed", "7"]);
        assert_eq!(o.status.code(), Some(0), "{suite}");
        let v = json(&o);
        assert_eq!(v["pass"], true);
        assert_eq!(v["seed"], 7);
    }
}

#[test]
fn verify_is_byte_identical() {
    let a = qfib(&["verify", "--suite", "theorem2", "--seed", "3"]);
    let b = qfib(&["verify", "--suite", "theorem2", "--seed", "3"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn verify_writes_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = qfib(&[
        "verify",
        "--suite",
        "lemma3",
        "--seed",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["suite"], "lemma3");
}

#[test]
fn corrupted_model_is_a_domain_violation() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path(), NON_PSD_MODEL);
    let o = qfib(&["verify", "--suite", "all", "--seed", "0", "--model", &model]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "DomainViolation");

    let o = qfib(&["compute", "--model", &model, "--x", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn configuration_errors_exit_2() {
    let bad = [
        vec!["compute", "--model", "builtin:nope", "--x", "0"],
        vec!["compute", "--x", "0", "--rank-tol=-1"],
        vec!["compute", "--x", "0", "--rank-tol", "-1"],
        vec!["compute", "--x", "0", "--richardson", "maybe"],
        vec!["compute", "--x", "1.5"],
        vec!["verify", "--suite", "bogus"],
        vec!["sweep", "--lo", "0.1", "--hi", "0.0", "--steps", "3"],
    ];
    for args in bad {
        let o = qfib(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
        assert!(err["error"].is_string());
    }
}
