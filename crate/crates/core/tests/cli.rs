//! End-to-end runs of the `nrdf` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nrdf::StateSpaceModel;
use tempfile::TempDir;

fn nrdf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nrdf")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn model_file(dir: &TempDir, name: &str, model: &StateSpaceModel) -> PathBuf {
    write(dir, name, &model.to_json())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Last stderr line, which is the error JSON on failure.
fn error_json(o: &Output) -> serde_json::Value {
    let err = stderr(o);
    serde_json::from_str(err.lines().last().unwrap()).unwrap()
}

const UNIFORM_BINARY: &str = r#"{"horizon": 0, "x_sizes": 2, "y_sizes": 2,
    "source": [[[0.5, 0.5]]], "distortion": [[0, 1], [1, 0]]}"#;

#[test]
fn rdf_gauss_memoryless_is_log_two() {
    let dir = TempDir::new().unwrap();
    let m = model_file(&dir, "m.json", &StateSpaceModel::scalar(0.0, 0.0, 1.0, 1.0));
    let o = nrdf(&["rdf-gauss", "--model", s(&m), "--D", "0.25"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = stdout(&o);
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "D,rate_nats,xi,k_active");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let rate: f64 = row[1].parse().unwrap();
    assert!((rate - 2f64.ln()).abs() < 1e-12);
    assert!(stderr(&o).contains("R = 0.693147 nats"));
}

#[test]
fn rdf_gauss_grid_and_bits_header() {
    let dir = TempDir::new().unwrap();
    let m = model_file(&dir, "m.json", &StateSpaceModel::scalar(0.9, 1.0, 1.0, 1.0));
    let out = dir.path().join("curve.csv");
    let o = nrdf(&["rdf-gauss", "--model", s(&m), "--D-grid", "0.5:3:6", "--bits", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("D,rate_bits,xi,k_active\n"));
    assert_eq!(csv.lines().count(), 7);
    // summary goes to stdout once the artifact is in a file
    assert_eq!(stdout(&o).lines().filter(|l| l.contains("bits")).count(), 6);
}

#[test]
fn bad_json_is_input_error() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "bad.json", "{\"A\": [[1, 2]");
    let o = nrdf(&["rdf-gauss", "--model", s(&m), "--D", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["error"], "parse");
}

#[test]
fn nonpositive_distortion_is_input_error() {
    let dir = TempDir::new().unwrap();
    let m = model_file(&dir, "m.json", &StateSpaceModel::scalar(0.5, 1.0, 1.0, 1.0));
    for d in ["0", "-1"] {
        let o = nrdf(&["realize", "--model", s(&m), "--D", d]);
        assert_eq!(o.status.code(), Some(2), "D={d}: {}", stderr(&o));
        assert_eq!(error_json(&o)["error"], "domain");
    }
}

#[test]
fn invalid_model_is_input_error() {
    let dir = TempDir::new().unwrap();
    // singular observation noise
    let m = model_file(&dir, "m.json", &StateSpaceModel::scalar(0.5, 1.0, 1.0, 0.0));
    let o = nrdf(&["rdf-gauss", "--model", s(&m), "--D", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["error"], "invalid_model");
}

#[test]
fn three_active_modes_are_unsupported() {
    let dir = TempDir::new().unwrap();
    let model = StateSpaceModel::from_row_slices(
        1,
        1,
        3,
        &[0.0],
        &[0.0],
        &[0.0, 0.0, 0.0],
        &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
    );
    let m = model_file(&dir, "m.json", &model);
    let o = nrdf(&["realize", "--model", s(&m), "--D", "0.3"]);
    assert_eq!(o.status.code(), Some(3));
    let e = error_json(&o);
    assert_eq!(e["error"], "unsupported");
    assert!(e["message"].as_str().unwrap().contains("3 active modes"));
}

#[test]
fn two_mode_mismatch_reports_diagnostics() {
    let dir = TempDir::new().unwrap();
    let model = StateSpaceModel::from_row_slices(
        2,
        2,
        2,
        &[0.0; 4],
        &[0.0; 4],
        &[1.0, 0.0, 0.0, 1.0],
        &[1.2f64.sqrt(), 0.0, 0.0, 1.0],
    );
    let m = model_file(&dir, "m.json", &model);
    let o = nrdf(&["realize", "--model", s(&m), "--D", "0.5", "--Q", "0.1"]);
    assert_eq!(o.status.code(), Some(3));
    let e = error_json(&o);
    assert_eq!(e["error"], "distortion_mismatch");
    assert_eq!(e["diagnostics"]["k_active"], 2);
    assert!(e["diagnostics"]["alpha"].is_array());
}

#[test]
fn zero_rate_design_has_no_power() {
    let dir = TempDir::new().unwrap();
    let m = model_file(&dir, "m.json", &StateSpaceModel::scalar(0.0, 0.0, 1.0, 1.0));
    let out = dir.path().join("design.json");
    let o = nrdf(&["realize", "--model", s(&m), "--D", "2", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let design: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(design["P"].as_f64(), Some(0.0));
    assert_eq!(design["rate_nats"].as_f64(), Some(0.0));
}

#[test]
fn realize_then_simulate_from_design() {
    let dir = TempDir::new().unwrap();
    let m = model_file(&dir, "m.json", &StateSpaceModel::scalar(0.0, 0.0, 1.0, 1.0));
    let design = dir.path().join("design.json");
    let o = nrdf(&["realize", "--model", s(&m), "--D", "0.25", "--out", s(&design)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("P = 3.000000"));

    let o = nrdf(&["simulate", "--model", s(&m), "--design", s(&design), "--steps", "200000", "--seed", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = stdout(&o);
    let row: Vec<f64> = csv.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row[0], 0.25);
    assert!((row[4] - 0.25).abs() < 4.0 * row[5], "empirical {} +/- {}", row[4], row[5]);
}

#[test]
fn missing_design_file_is_input_error() {
    let dir = TempDir::new().unwrap();
    let m = model_file(&dir, "m.json", &StateSpaceModel::scalar(0.0, 0.0, 1.0, 1.0));
    let missing = dir.path().join("nope.json");
    let o = nrdf(&["simulate", "--model", s(&m), "--design", s(&missing), "--steps", "1000"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["error"], "io");
}

#[test]
fn simulate_sweep_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let m = model_file(&dir, "m.json", &StateSpaceModel::scalar(0.7, 1.0, 1.0, 1.0));
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = nrdf(&[
            "simulate", "--model", s(&m), "--D-grid", "0.4,0.8", "--steps", "30000", "--burn-in", "1000", "--seed",
            "9", "--out", s(&out),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read(out).unwrap()
    };
    let a = run("a.csv");
    assert_eq!(a, run("b.csv"));
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("D,rate_nats,P,Q,empirical_distortion,stderr,empirical_power,steps,seed\n"));
    // rows are seeded base + index
    assert!(text.lines().nth(1).unwrap().ends_with(",30000,9"));
    assert!(text.lines().nth(2).unwrap().ends_with(",30000,10"));
}

#[test]
fn simulate_failed_row_is_a_comment() {
    let dir = TempDir::new().unwrap();
    let model = StateSpaceModel::from_row_slices(1, 1, 3, &[0.0], &[0.0], &[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    let m = model_file(&dir, "m.json", &model);
    let o = nrdf(&["simulate", "--model", s(&m), "--D-grid", "0.3,3.5", "--steps", "20000", "--burn-in", "1000"]);
    assert_eq!(o.status.code(), Some(3));
    let csv = stdout(&o);
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[1].starts_with("# error at D=0.3"), "{csv}");
    assert!(lines[2].starts_with("3.5,0,"), "{csv}");
}

#[test]
fn rdf_discrete_uniform_binary() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "i.json", UNIFORM_BINARY);
    let out = dir.path().join("r.csv");
    let o = nrdf(&["rdf-discrete", "--instance", s(&inst), "--D", "0.1", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("R = 0.368064 nats"));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("D,s,rate_nats,rate_per_stage_nats,distortion\n"));
    let kernels: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.with_extension("kernels.json")).unwrap()).unwrap();
    assert_eq!(kernels.as_array().unwrap().len(), 1);
}

#[test]
fn rdf_discrete_below_minimum_distortion() {
    let dir = TempDir::new().unwrap();
    let inst = write(
        &dir,
        "i.json",
        r#"{"horizon": 0, "x_sizes": 2, "y_sizes": 2, "source": [[[0.5, 0.5]]],
            "distortion": [[0.2, 1], [1, 0.2]]}"#,
    );
    let o = nrdf(&["rdf-discrete", "--instance", s(&inst), "--D", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["error"], "domain");
}

#[test]
fn oversized_instance_is_rejected() {
    let dir = TempDir::new().unwrap();
    let inst = write(
        &dir,
        "i.json",
        r#"{"horizon": 3, "x_sizes": 2, "y_sizes": 2, "atom_cap": 100,
            "source": [[[0.5, 0.5]], [[0.5, 0.5], [0.5, 0.5]],
                       [[0.5, 0.5], [0.5, 0.5], [0.5, 0.5], [0.5, 0.5]],
                       [[0.5, 0.5], [0.5, 0.5], [0.5, 0.5], [0.5, 0.5],
                        [0.5, 0.5], [0.5, 0.5], [0.5, 0.5], [0.5, 0.5]]],
            "distortion": [[0, 1], [1, 0]]}"#,
    );
    let o = nrdf(&["rdf-discrete", "--instance", s(&inst), "--D", "0.2"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert_eq!(error_json(&o)["error"], "instance_too_large");
}

#[test]
fn flags_override_config_file() {
    let dir = TempDir::new().unwrap();
    let m = model_file(&dir, "m.json", &StateSpaceModel::scalar(0.0, 0.0, 1.0, 1.0));
    let cfg = write(&dir, "cfg.json", &format!(r#"{{"model": "{}", "D": 0.5, "Q": 2.0}}"#, s(&m)));
    let o = nrdf(&["rdf-gauss", "--config", s(&cfg), "--D", "0.25"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let echo: serde_json::Value = serde_json::from_str(stderr(&o).lines().next().unwrap()).unwrap();
    assert_eq!(echo["D"].as_f64(), Some(0.25));
    assert_eq!(echo["Q"].as_f64(), Some(2.0));
    assert!(stderr(&o).contains("R = 0.693147"));
}

#[test]
fn unknown_config_key_is_input_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "cfg.json", r#"{"D": 0.5, "horizon": 3}"#);
    let o = nrdf(&["rdf-gauss", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn check_reports_pass_lines() {
    let dir = TempDir::new().unwrap();
    let m = model_file(&dir, "m.json", &StateSpaceModel::scalar(0.8, 1.0, 1.0, 1.0));
    let inst = write(&dir, "i.json", UNIFORM_BINARY);
    let out = dir.path().join("check.json");
    let o = nrdf(&["check", "--model", s(&m), "--instance", s(&inst), "--D", "0.2", "--out", s(&out)]);
    assert!(o.status.success(), "{}\n{}", stdout(&o), stderr(&o));
    let lines: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let lines = lines.as_array().unwrap();
    assert!(lines.len() >= 5);
    assert!(lines.iter().all(|l| l["pass"] == true));
}
