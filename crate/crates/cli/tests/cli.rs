use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use wronski_cli::config::{load_config, Task};

fn wronski(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wronski"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("examples")
        .join(name)
}

fn write_config(dir: &tempfile::TempDir, body: &str) -> PathBuf {
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn bell_expand_prints_the_expansion() {
    let o = wronski(&["bell-expand", "--m", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "B_3 = X1^3 + 2 X1 X2 + X2 X1 + X3\n");
    let alias = wronski(&["bell", "--m", "3"]);
    assert_eq!(stdout(&alias), stdout(&o));
}

#[test]
fn bell_expand_rejects_orders_beyond_the_limit() {
    let o = wronski(&["bell-expand", "--m", "13"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`m`"), "{}", stderr(&o));
}

#[test]
fn every_bundled_example_runs_with_its_expected_status() {
    let mut seen = 0;
    for entry in std::fs::read_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("examples")).unwrap()
    {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("cfg") {
            continue;
        }
        seen += 1;
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let expected = if name.contains("negative") { 1 } else { 0 };
        let o = wronski(&["run", "--config", path.to_str().unwrap()]);
        assert_eq!(
            o.status.code(),
            Some(expected),
            "{name}: {}{}",
            stdout(&o),
            stderr(&o)
        );
        load_config(&path).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
    assert!(seen >= 10);
}

#[test]
fn verify_exp12_passes_every_identity() {
    let cfg = example("exp12.cfg");
    let o = wronski(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for id in [
        "frame-derivatives",
        "bell-wronskian",
        "replaced-column-d0",
        "replaced-column-d1",
        "replaced-column-d2",
        "abel-liouville",
        "bell-wronskian-reconstructed",
        "reconstructed-ode",
    ] {
        assert!(
            text.contains(&format!("PASS  {id}")),
            "{id} missing from\n{text}"
        );
    }
    assert!(text.contains("worst at t ="));
}

#[test]
fn json_reports_carry_per_point_residuals() {
    let cfg = example("exp12.cfg");
    let o = wronski(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "json",
    ]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["task"], "verify");
    assert_eq!(doc["passed"], true);
    let reports = doc["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 8);
    for r in reports {
        assert_eq!(r["points"].as_array().unwrap().len(), 11);
        assert!(r["residuals"].as_array().unwrap().len() >= 11);
        assert!(r["max_rel"].as_f64().unwrap() <= 1e-8);
    }
}

#[test]
fn equiv_reports_the_phi_witness() {
    let o = wronski(&[
        "equiv", "--f", "exp(t)", "--f", "exp(2*t)", "--g", "exp(t)", "--g", "exp(3*t)",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("Phi^[1] mismatch"), "{}", stdout(&o));

    let json = wronski(&[
        "equiv", "--f", "exp(t)", "--f", "exp(2*t)", "--g", "exp(t)", "--g", "exp(3*t)",
        "--format", "json",
    ]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    let w = &doc["result"]["witness"];
    assert_eq!(w["j"], 1);
    assert!((w["phi_f"].as_f64().unwrap() - 3.0).abs() < 1e-9);
    assert!((w["phi_g"].as_f64().unwrap() - 4.0).abs() < 1e-9);
}

#[test]
fn equiv_recovers_the_matrix() {
    let o = wronski(&[
        "equiv",
        "--f",
        "exp(t)",
        "--f",
        "exp(2*t)",
        "--g",
        "exp(t) + exp(2*t)",
        "--g",
        "exp(2*t)",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let a: Vec<f64> = doc["result"]["matrix"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    for (x, y) in a.iter().zip([1.0, -1.0, 0.0, 1.0]) {
        assert!((x - y).abs() < 1e-8, "{a:?}");
    }
}

#[test]
fn degenerate_frames_exit_with_status_three() {
    let o = wronski(&["verify", "--f", "exp(t)", "--f", "2*exp(t)"]);
    assert_eq!(o.status.code(), Some(3));
    let o = wronski(&[
        "equiv", "--f", "exp(t)", "--f", "exp(2*t)", "--g", "t", "--g", "t",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("no usable sample points"));
    let o = wronski(&["reconstruct", "--f", "t", "--f", "2*t"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn failed_identities_exit_with_status_one() {
    // Coefficients that do not belong to the frame.
    let o = wronski(&[
        "verify",
        "--f",
        "exp(t)",
        "--f",
        "exp(2*t)",
        "--a",
        "3",
        "--a",
        "-3",
        "--identity",
        "bell-wronskian",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL  bell-wronskian"));
}

#[test]
fn wronskian_task_matches_hand_values() {
    let o = wronski(&[
        "wronskian",
        "--f",
        "exp(t)",
        "--f",
        "exp(2*t)",
        "--a",
        "3",
        "--a",
        "-2",
        "--k",
        "2,0",
        "--k",
        "2,1",
        "--points",
        "0,",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = doc["values"].as_array().unwrap();
    let value = |row: usize, key: &str| rows[row][key][0].as_f64().unwrap();
    assert!((value(0, "direct") + 3.0).abs() < 1e-12);
    assert!((value(0, "bell") + 3.0).abs() < 1e-12);
    assert!((value(1, "direct") + 2.0).abs() < 1e-12);
    assert!((value(1, "bell") + 2.0).abs() < 1e-12);
}

#[test]
fn reconstruct_task_reports_cauchy_euler_coefficients() {
    let o = wronski(&[
        "reconstruct",
        "--f",
        "t",
        "--f",
        "t^2",
        "--domain",
        "0,inf",
        "--points",
        "1,",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let a = doc["coefficients"][0].as_array().unwrap();
    assert!((a[0].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!((a[1].as_f64().unwrap() + 2.0).abs() < 1e-12);
}

#[test]
fn minimal_config_loads() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(
        &dir,
        r#"{"task": "verify", "n": 2, "functions": ["exp(t)", "exp(2*t)"]}"#,
    );
    let cfg = load_config(&path).unwrap();
    assert_eq!(cfg.task, Task::Verify);
    assert_eq!(cfg.n, 2);
    assert_eq!(cfg.points.len(), 11);
}

#[test]
fn missing_functions_is_a_schema_error_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(&dir, r#"{"task": "verify", "n": 2}"#);
    assert_eq!(load_config(&path).unwrap_err().field, "functions");
    let o = wronski(&["verify", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`functions`"));
}

#[test]
fn dimension_mismatch_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(
        &dir,
        r#"{"task": "verify", "n": 2, "functions": ["exp(t)", "exp(2*t)", "t"]}"#,
    );
    let err = load_config(&path).unwrap_err();
    assert_eq!(err.field, "functions");
    assert!(err.message.contains("expected n = 2"));
    let o = wronski(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn schema_errors_name_the_offending_key() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (
            r#"{"task": "verify", "functions": ["t"], "colour": 1}"#,
            "colour",
        ),
        (
            r#"{"task": "verify", "functions": ["t", "exp(2*t"]}"#,
            "functions[1]",
        ),
        (
            r#"{"task": "verify", "functions": ["t"], "tolerance": {"rel": -1}}"#,
            "tolerance.rel",
        ),
        (
            r#"{"task": "verify", "functions": ["t"], "tolerance": {"relative": 1}}"#,
            "tolerance.relative",
        ),
        (
            r#"{"task": "verify", "functions": ["t"], "domain": [2, 1]}"#,
            "domain",
        ),
        (
            r#"{"task": "verify", "functions": ["t"], "domain": [0, 1], "points": [0.5, 2]}"#,
            "points[1]",
        ),
        (r#"{"task": "equiv", "functions": ["t"]}"#, "g"),
        (
            r#"{"task": "verify", "functions": ["t", "t^2"], "multi_indices": [[2]]}"#,
            "multi_indices[0]",
        ),
        (
            r#"{"task": "verify", "functions": ["t"], "identities": ["bell-wronskian"]}"#,
            "coefficients",
        ),
        (r#"{"task": "sing", "functions": ["t"]}"#, "task"),
        (r#"{"functions": ["t"]}"#, "task"),
        (
            r#"{"task": "verify", "functions": ["t"], "matrix": ["1", "2"]}"#,
            "matrix",
        ),
    ];
    for (body, field) in cases {
        let path = write_config(&dir, body);
        let err = load_config(&path).unwrap_err();
        assert_eq!(err.field, field, "{body}: {err}");
    }
}

#[test]
fn syntax_errors_report_the_offset() {
    let o = wronski(&["verify", "--f", "t^^2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`functions[0]`"));
    assert!(stderr(&o).contains("offset 2"));
}

#[test]
fn subcommand_and_config_task_must_agree() {
    let o = wronski(&["equiv", "--config", example("exp12.cfg").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`task`"));
}

#[test]
fn flags_override_the_config_file() {
    let cfg = example("exp12.cfg");
    let o = wronski(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--points",
        "3",
        "--tol",
        "1e-6",
        "--format",
        "json",
    ]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let r = &doc["reports"][0];
    assert_eq!(r["points"].as_array().unwrap().len(), 3);
    assert_eq!(r["tolerance"].as_f64().unwrap(), 1e-6);
}

#[test]
fn json_errors_are_emitted_as_objects() {
    let o = wronski(&[
        "verify", "--f", "exp(t)", "--f", "2*exp(t)", "--format", "json",
    ]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["task"], "verify");
    let o = wronski(&["verify", "--f", "t^^2", "--format", "json"]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["error"]["kind"], "config");
}
