//! CLI acceptance: determinism of the shipped example config (criterion 10)
//! and the documented exit-code conventions.

use std::path::{Path, PathBuf};
use std::process::Command;

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_ultrafun")
}

fn example_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/example.json")
}

fn run(args: &[&str]) -> std::process::Output {
    Command::new(binary())
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn criterion_10_reports_are_byte_identical_across_runs() {
    let config = example_config();
    let config = config.to_str().unwrap();
    for subcommand in [
        vec!["frame", "--name", "p5_auto"],
        vec!["extend", "--space", "p1", "--functional", "abs_inv_sqrt"],
        vec!["refine", "--chain", "poly_growth"],
    ] {
        let tmp = tempfile::tempdir().unwrap();
        let out1 = tmp.path().join("run1");
        let out2 = tmp.path().join("run2");
        for out in [&out1, &out2] {
            let mut args = subcommand.clone();
            args.extend_from_slice(&["--config", config, "--out", out.to_str().unwrap()]);
            let output = run(&args);
            assert!(
                output.status.success(),
                "{subcommand:?} failed: {}",
                String::from_utf8_lossy(&output.stderr)
            );
        }
        let r1 = std::fs::read(out1.join("report.json")).unwrap();
        let r2 = std::fs::read(out2.join("report.json")).unwrap();
        let identical = r1 == r2;
        println!(
            "criterion 10 ({}): {}",
            subcommand[0],
            if identical { "PASS" } else { "FAIL" }
        );
        assert!(identical, "{subcommand:?} reports differ between runs");
    }
}

#[test]
fn frame_example_emits_endpoint_points_and_unit_weights() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let output = run(&[
        "frame",
        "--config",
        example_config().to_str().unwrap(),
        "--name",
        "p1_endpoints",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], serde_json::Value::Bool(true));
    let weights: Vec<f64> = report["values"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["re"].as_f64().unwrap())
        .collect();
    assert_eq!(weights.len(), 2);
    for w in weights {
        assert!((w - 1.0).abs() < 1e-12);
    }
    let kernel_csv = std::fs::read_to_string(out.join("kernel.csv")).unwrap();
    assert!(kernel_csv.lines().count() == 5);
    let frame: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("frame.json")).unwrap()).unwrap();
    let points: Vec<f64> = frame["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(points, vec![-1.0, 1.0]);
}

#[test]
fn extension_report_contains_the_closed_form_value() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let output = run(&[
        "extend",
        "--config",
        example_config().to_str().unwrap(),
        "--space",
        "p1",
        "--functional",
        "abs_inv_sqrt",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let at_zero = report["values"]
        .as_array()
        .unwrap()
        .iter()
        .find(|v| v["x"].as_f64().unwrap() == 0.0)
        .expect("sample at zero");
    assert!((at_zero["re"].as_f64().unwrap() - 2.0).abs() < 1e-6);
}

#[test]
fn build_space_exports_the_space_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let output = run(&[
        "build-space",
        "--config",
        example_config().to_str().unwrap(),
        "--name",
        "p3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let space: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("space.json")).unwrap()).unwrap();
    assert_eq!(space["dimension"], serde_json::json!(4));
    assert!(space["gram_residual"].as_f64().unwrap() <= 1e-10);
    assert_eq!(space["generator_coefficients"].as_array().unwrap().len(), 4);
}

#[test]
fn unknown_generator_set_exits_2_and_names_it() {
    let tmp = tempfile::tempdir().unwrap();
    let output = run(&[
        "build-space",
        "--config",
        example_config().to_str().unwrap(),
        "--name",
        "nope",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("nope"),
        "stderr should name the set: {stderr}"
    );
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let output = run(&["transmogrify"]);
    assert_eq!(output.status.code(), Some(64));
}

#[test]
fn divergent_functional_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let config_path = tmp.path().join("divergent.json");
    std::fs::write(
        &config_path,
        r#"{
  "domain": { "lower": -1.0, "upper": 1.0 },
  "quadrature": { "panels": 4, "order": 10 },
  "generator_sets": { "p1": { "family": "legendre", "count": 2 } },
  "functionals": {
    "blowup": { "kind": "integral_against", "function": "inv_square", "singular_points": [0.0] }
  }
}"#,
    )
    .unwrap();
    let output = run(&[
        "extend",
        "--config",
        config_path.to_str().unwrap(),
        "--space",
        "p1",
        "--functional",
        "blowup",
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("divergent"), "stderr: {stderr}");
}

#[test]
fn unknown_config_keys_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let config_path = tmp.path().join("extra.json");
    std::fs::write(
        &config_path,
        r#"{
  "domain": { "lower": -1.0, "upper": 1.0 },
  "quadrature": { "panels": 4, "order": 10 },
  "surprise": true
}"#,
    )
    .unwrap();
    let output = run(&[
        "build-space",
        "--config",
        config_path.to_str().unwrap(),
        "--name",
        "p1",
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("surprise"));
}

#[test]
fn failing_checks_exit_1_under_a_tiny_tolerance_scale() {
    let tmp = tempfile::tempdir().unwrap();
    let output = run(&[
        "frame",
        "--config",
        example_config().to_str().unwrap(),
        "--name",
        "p5_auto",
        "--out",
        tmp.path().join("out").to_str().unwrap(),
        "--tol-scale",
        "1e-20",
    ]);
    assert_eq!(output.status.code(), Some(1));
}
