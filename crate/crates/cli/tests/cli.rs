use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

const STATIC_CYCLE: &str = r#"{"graph": {"kind": "cycle", "params": {"n": 8}, "loops": true},
 "schedule": {"kind": "static", "params": {}, "horizon": 8}}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tempo-kernel"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8(out.stderr.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1, "{text}");
    serde_json::from_str(lines[0]).unwrap()
}

#[test]
fn kernel_csv_rows_are_stochastic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", STATIC_CYCLE);
    let out = dir.path().join("k.csv");
    let o = run(&["kernel", "--config", &cfg, "--s", "0", "--t", "8", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut rows = [0.0f64; 8];
    let mut body = false;
    for line in text.lines() {
        if line == "x,y,value" {
            body = true;
            continue;
        }
        if body {
            let f: Vec<&str> = line.split(',').collect();
            rows[f[0].parse::<usize>().unwrap()] += f[2].parse::<f64>().unwrap();
        }
    }
    assert!(body);
    for r in rows {
        assert!((r - 1.0).abs() < 1e-12);
    }
    assert!(std::fs::read_dir(dir.path()).unwrap().all(|e| !e.unwrap().file_name().to_string_lossy().contains(".tmp")));
}

#[test]
fn bad_config_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"schedule": {"kind": "nope"}}"#);
    let o = run(&["phi-check", "--config", &bad]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr_json(&o);
    assert_eq!(e["class"], "validation");

    let missing = dir.path().join("missing.json");
    let o = run(&["phi-check", "--config", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    stderr_json(&o);
}

#[test]
fn unknown_flag_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", STATIC_CYCLE);
    let o = run(&["kernel", "--config", &cfg, "--frobnicate", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"], "Usage");
}

#[test]
fn unknown_param_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let text = STATIC_CYCLE.trim_end_matches('}').to_string() + r#", "params": {"radius": 2, "colour": 1}}"#;
    let cfg = write(dir.path(), "c.json", &text);
    let o = run(&["phi-check", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn run_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(r#"{{"experiment": "bounds", "schedule": {STATIC_CYCLE}, "seed": 7}}"#);
    let cfg = write(dir.path(), "run.json", &cfg);
    let mut reports = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let o = run(&["--threads", "2", "run", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(out.join("meta.json").exists());
        reports.push(std::fs::read(out.join("report.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    let rep: Value = serde_json::from_slice(&reports[0]).unwrap();
    assert_eq!(rep["pass"], true);
}

#[test]
fn perturbative_rejects_other_experiments() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(r#"{{"experiment": "bounds", "schedule": {STATIC_CYCLE}}}"#);
    let cfg = write(dir.path(), "run.json", &cfg);
    let o = run(&["perturbative", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn counterexample_sets_the_ghkl_flag() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["counterexample", "--nmax", "1024", "--seed", "7", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rep: Value = serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    let flag = rep["checks"].as_array().unwrap().iter().find(|c| c["name"] == "ghkl_flag").unwrap();
    assert_eq!(flag["pass"], true);
    assert!(dir.path().join("counterexample.csv").exists());
}

#[test]
fn nash_check_reports_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", STATIC_CYCLE);
    let o = run(&["nash-check", "--config", &cfg, "--nmax", "8"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rep: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rep["violations"], 0);
}
