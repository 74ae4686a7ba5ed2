//! End-to-end checks of the command-line surface: config diagnostics, exit
//! codes, output files, determinism, and the guard rails on each subcommand.

use annulus_abc::config::parse_config;
use annulus_abc::runner;
use annulus_abc::CliError;
use serde_json::{json, Value};
use std::process::Command;
use std::sync::{Mutex, MutexGuard};

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|p| p.into_inner())
}

fn with_output(mut doc: Value) -> (tempfile::TempDir, Value) {
    let dir = tempfile::tempdir().expect("scratch dir");
    doc["output"] = Value::String(dir.path().to_str().unwrap().to_owned());
    (dir, doc)
}

fn parsed(doc: &Value) -> annulus_abc::config::ExperimentConfig {
    parse_config(&doc.to_string()).expect("config")
}

fn config_message(err: CliError) -> String {
    match err {
        CliError::Config(m) => m,
        CliError::Numerical(m) => panic!("expected a config error, got numerical: {m}"),
    }
}

fn example1(levels: usize, base_h: f64) -> Value {
    json!({
        "problem": "laplace",
        "gamma": {"kind": "kite"},
        "gamma0": {"kind": "circle", "scale": 3.0},
        "exact_solution": {"preset": "example1"},
        "levels": levels,
        "base_h": base_h,
        "output": ""
    })
}

#[test]
fn malformed_config_exits_2_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"problem": "laplace", "gamma": {"kind": "hexagon"}, "gamma0": {"kind": "circle"}, "base_h": 0.5, "output": "out"}"#,
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_annulus-abc"))
        .args(["validate", "--config", path.to_str().unwrap()])
        .output()
        .unwrap();
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(out.status.code(), Some(2), "stderr: {stderr}");
    assert!(stderr.contains("gamma.kind"), "stderr: {stderr}");
}

#[test]
fn binary_run_writes_log_and_exits_0() {
    let _guard = serial();
    let (out_dir, doc) = with_output(example1(1, 0.6));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(&path, doc.to_string()).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_annulus-abc"))
        .args(["run", "--config", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let log = std::fs::read_to_string(out_dir.path().join("run.log")).unwrap();
    assert!(log.contains("residual"), "log: {log}");
}

#[test]
fn missing_required_field_is_named() {
    let mut doc = example1(1, 0.5);
    doc.as_object_mut().unwrap().remove("base_h");
    doc["output"] = json!("out");
    let err = parse_config(&doc.to_string()).unwrap_err();
    assert!(config_message(err).contains("base_h"));
}

#[test]
fn unknown_top_level_key_is_named() {
    let mut doc = example1(1, 0.5);
    doc["mesh_quality"] = json!(0.9);
    let err = parse_config(&doc.to_string()).unwrap_err();
    assert!(config_message(err).contains("mesh_quality"));
}

#[test]
fn pinned_preset_parameters_reject_conflicts() {
    let (_dir, mut doc) = with_output(json!({
        "problem": "lame",
        "parameters": {"mu": 5.0},
        "gamma": {"kind": "kite"},
        "gamma0": {"kind": "circle", "scale": 3.0},
        "exact_solution": {"preset": "example3"},
        "base_h": 0.5,
        "output": ""
    }));
    doc["parameters"]["mu"] = json!(5.0);
    let err = runner::validate(&parsed(&doc)).unwrap_err();
    assert!(config_message(err).contains("mu"));
}

#[test]
fn refraction_outside_inhomogeneous_rejected() {
    let (_dir, mut doc) = with_output(example1(1, 0.5));
    doc["parameters"] = json!({"refraction": {"kind": "uniform", "value": 1.5}});
    let err = runner::validate(&parsed(&doc)).unwrap_err();
    assert!(config_message(err).contains("refraction"));
}

#[test]
fn converge_rejects_preset_none() {
    let (_dir, mut doc) = with_output(example1(2, 0.6));
    doc["exact_solution"] = json!({"preset": "none"});
    let err = runner::converge(&parsed(&doc)).unwrap_err();
    assert!(config_message(err).contains("convergence needs a preset"));
}

#[test]
fn field_rejects_closed_form_presets() {
    let (_dir, doc) = with_output(example1(1, 0.6));
    let err = runner::field(&parsed(&doc)).unwrap_err();
    assert!(config_message(err).contains("field export needs"));
}

#[test]
fn two_level_series_skips_fitted_slopes_in_csv() {
    let _guard = serial();
    let (out_dir, doc) = with_output(example1(2, 0.6));
    let report = runner::converge(&parsed(&doc)).unwrap();
    assert!(report.l2_rate.is_none() && report.h1_rate.is_none());

    let csv = std::fs::read_to_string(out_dir.path().join("errors.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "level,h,n_dof,l2_error,h1_error,l2_rate,h1_rate");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].ends_with(",,"), "level 0 carries no rates: {}", lines[1]);
    let fields: Vec<&str> = lines[2].split(',').collect();
    let l2_rate: f64 = fields[5].parse().unwrap();
    let h1_rate: f64 = fields[6].parse().unwrap();
    assert!(l2_rate > 1.0 && h1_rate > 0.5, "pairwise rates: {l2_rate}, {h1_rate}");

    let log = std::fs::read_to_string(out_dir.path().join("run.log")).unwrap();
    assert!(log.contains("fitted rates: skipped"), "log: {log}");
}

#[test]
fn deterministic_series_are_bit_identical() {
    let _guard = serial();
    let mut csvs = Vec::new();
    for _ in 0..2 {
        let (out_dir, mut doc) = with_output(example1(2, 0.6));
        doc["deterministic"] = json!(true);
        runner::converge(&parsed(&doc)).unwrap();
        csvs.push(std::fs::read(out_dir.path().join("errors.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn run_solves_example3_and_echoes_pinned_parameters() {
    let _guard = serial();
    let (out_dir, doc) = with_output(json!({
        "problem": "lame",
        "gamma": {"kind": "kite"},
        "gamma0": {"kind": "circle", "scale": 3.0},
        "exact_solution": {"preset": "example3"},
        "base_h": 0.5,
        "output": ""
    }));
    let summary = runner::run(&parsed(&doc)).unwrap();
    assert!(summary.residual <= 1e-10, "residual {}", summary.residual);
    let errors = summary.errors.expect("closed-form errors");
    assert!(errors.l2_error < 0.1 && errors.l2_error > 0.0);

    let log = std::fs::read_to_string(out_dir.path().join("run.log")).unwrap();
    assert!(log.contains("mu = 2") && log.contains("lambda = 3"), "log: {log}");
    assert!(log.contains("source = (0.5, 0)"), "log: {log}");
}

#[test]
fn zero_data_field_is_numerically_zero() {
    let _guard = serial();
    let (out_dir, mut doc) = with_output(example1(1, 0.5));
    doc["problem"] = json!("helmholtz");
    doc["parameters"] = json!({"k": 1.0});
    doc["exact_solution"] = json!({"preset": "none"});
    let summary = runner::field(&parsed(&doc)).unwrap();
    assert!(summary.max_abs <= 1e-8, "max |u| = {}", summary.max_abs);
    assert!(out_dir.path().join("field.vtk").exists());
}

#[test]
fn scattering_field_writes_finite_vtk() {
    let _guard = serial();
    let (out_dir, doc) = with_output(json!({
        "problem": "helmholtz",
        "parameters": {"k": 3.0},
        "gamma": {"kind": "kite"},
        "gamma0": {"kind": "kite", "scale": 3.0},
        "exact_solution": {"preset": "plane_wave_scattering", "direction": [1.0, 0.0]},
        "base_h": 0.45,
        "output": ""
    }));
    let summary = runner::field(&parsed(&doc)).unwrap();
    assert!(summary.max_abs.is_finite() && summary.max_abs > 0.5);
    let (residual, scale) = summary.neumann_residual.expect("obstacle data check");
    assert!(
        residual <= 0.5 * scale,
        "weak Neumann residual {residual:.3e} vs data scale {scale:.3e}"
    );

    let vtk = std::fs::read_to_string(out_dir.path().join("field.vtk")).unwrap();
    assert!(vtk.starts_with("# vtk DataFile Version 3.0"));
    let lower = vtk.to_lowercase();
    assert!(!lower.contains("nan") && !lower.contains("inf"));
    assert!(vtk.contains("u_re") && vtk.contains("u_abs"));
}

#[test]
fn validate_accepts_sound_geometry_and_rejects_contact() {
    let _guard = serial();
    let (_dir, doc) = with_output(json!({
        "problem": "lame",
        "gamma": {"kind": "kite"},
        "gamma0": {"kind": "circle", "scale": 3.0},
        "exact_solution": {"preset": "example3"},
        "base_h": 0.5,
        "output": ""
    }));
    runner::validate(&parsed(&doc)).unwrap();

    let (_dir2, mut tight) = with_output(example1(1, 0.5));
    tight["gamma0"] = json!({"kind": "circle", "scale": 1.7});
    let err = runner::validate(&parsed(&tight)).unwrap_err();
    let msg = config_message(err);
    assert!(
        msg.contains("contained") || msg.contains("close"),
        "message: {msg}"
    );
}

#[test]
fn exit_codes_partition_config_and_numerical_failures() {
    assert_eq!(CliError::Config("bad".into()).exit_code(), 2);
    assert_eq!(CliError::Numerical("hard".into()).exit_code(), 3);
}
