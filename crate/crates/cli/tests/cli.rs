//! Black-box tests of the `tripoint` binary: exit codes, trace format,
//! reproducibility, and the compare path.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_tripoint")
}

fn run_cli(args: &[&str]) -> Output {
    Command::new(binary())
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, contents).unwrap();
    path
}

fn selection_config(dir: &Path, max_iters: u32) -> String {
    format!(
        r#"{{
  "seed": 42,
  "problem": {{
    "generator": "selection",
    "dim": 2,
    "set": {{"kind": "box", "lo": [0.0, 0.0], "hi": [1.0, 1.0]}},
    "v": [2.0, 2.0],
    "rho": 0.25
  }},
  "stopping": {{"max_iters": {max_iters}}},
  "outputs": {{
    "trace_path": "{dir}/trace.csv",
    "summary_path": "{dir}/summary.json"
  }}
}}"#,
        dir = dir.display()
    )
}

const CSV_HEADER: &str =
    "n,step_norm,gap_ux,gap_uz,gap_xy,gmep_res,vi_res,fix_res,alpha,beta,lambda,r,a";

#[test]
fn run_selection_writes_trace_and_summary() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "sel.json", &selection_config(dir.path(), 500));
    let out = run_cli(&["run", "--config", config.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(
        lines.next().unwrap(),
        CSV_HEADER,
        "header must match byte-for-byte"
    );
    assert_eq!(lines.count(), 500, "one row per iteration performed");

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["status"], "max_iters");
    assert_eq!(summary["n_final"], 500);
    let err = summary["final_error"].as_f64().unwrap();
    assert!(err <= 2e-3, "final error {err}");
    assert!(summary["schedule_report"]["entries"].is_array());
    assert!(summary["strength_report"]["entries"].is_array());
}

#[test]
fn identical_seeds_reproduce_identical_bytes() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "sel.json", &selection_config(dir.path(), 200));
    let trace_a = dir.path().join("a.csv");
    let trace_b = dir.path().join("b.csv");
    for (path, summary) in [(&trace_a, "sa.json"), (&trace_b, "sb.json")] {
        let out = run_cli(&[
            "run",
            "--config",
            config.to_str().unwrap(),
            "--trace",
            path.to_str().unwrap(),
            "--summary",
            dir.path().join(summary).to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    assert_eq!(
        fs::read(&trace_a).unwrap(),
        fs::read(&trace_b).unwrap(),
        "same seed must reproduce the trace byte-for-byte"
    );
}

#[test]
fn regenerated_config_reproduces_identical_bytes() {
    // round-trip: parse, re-serialize, run again; traces agree bitwise
    let dir = TempDir::new().unwrap();
    let original = selection_config(dir.path(), 150);
    let config_a = write_config(dir.path(), "a.json", &original);
    let parsed = tripoint_cli::RunConfig::from_json(&original).unwrap();
    let config_b = write_config(dir.path(), "b.json", &parsed.to_json());

    let trace_a = dir.path().join("ta.csv");
    let trace_b = dir.path().join("tb.csv");
    for (cfg, trace, summary) in [
        (&config_a, &trace_a, "sa.json"),
        (&config_b, &trace_b, "sb.json"),
    ] {
        let out = run_cli(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--trace",
            trace.to_str().unwrap(),
            "--summary",
            dir.path().join(summary).to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    assert_eq!(fs::read(&trace_a).unwrap(), fs::read(&trace_b).unwrap());
}

#[test]
fn malformed_config_exits_two() {
    let dir = TempDir::new().unwrap();
    // missing required "stopping"
    let config = write_config(
        dir.path(),
        "bad.json",
        r#"{"seed": 1, "problem": {"generator": "selection", "dim": 2,
            "set": {"kind": "box", "lo": [0.0], "hi": [1.0]}, "v": [1.0], "rho": 0.5},
            "outputs": {"trace_path": "t.csv", "summary_path": "s.json"}}"#,
    );
    let out = run_cli(&["run", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // unknown key
    let config = write_config(
        dir.path(),
        "unknown.json",
        &selection_config(dir.path(), 10).replace("\"seed\": 42", "\"seed\": 42, \"typo\": 1"),
    );
    let out = run_cli(&["run", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // unreadable path
    let out = run_cli(&[
        "run",
        "--config",
        dir.path().join("absent.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_only_emits_reports_without_trace() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "sel.json", &selection_config(dir.path(), 100));
    let out = run_cli(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--validate-only",
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(
        !dir.path().join("trace.csv").exists(),
        "no trace rows in validate-only mode"
    );
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["status"], "validated");
    assert_eq!(summary["n_final"], 0);
}

#[test]
fn invalid_schedule_exits_three_unless_forced() {
    let dir = TempDir::new().unwrap();
    // alpha constant violates the vanishing condition
    let config_text = selection_config(dir.path(), 50).replace(
        "\"stopping\"",
        r#""schedule": {
            "alpha": {"kind": "constant", "c": 0.5},
            "beta": {"kind": "power_law", "c": 1.0, "p": 2.0, "n0": 1.0},
            "lambda": {"kind": "constant", "c": 1.0},
            "r": {"kind": "constant", "c": 1.0},
            "a": {"kind": "constant", "c": 0.0}
        },
        "stopping""#,
    );
    let config = write_config(dir.path(), "sched.json", &config_text);
    let out = run_cli(&["run", "--config", config.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let out = run_cli(&["run", "--config", config.to_str().unwrap(), "--force"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn singleton_run_reports_known_solution_error() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        dir.path(),
        "single.json",
        &format!(
            r#"{{
  "seed": 42,
  "problem": {{
    "generator": "singleton",
    "dim": 2,
    "set": {{"kind": "box", "lo": [-1.0, -1.0], "hi": [1.0, 1.0]}},
    "p": [0.25, -0.5]
  }},
  "stopping": {{"max_iters": 300}},
  "outputs": {{"trace_path": "{dir}/t.csv", "summary_path": "{dir}/s.json"}}
}}"#,
            dir = dir.path().display()
        ),
    );
    let out = run_cli(&["run", "--config", config.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap();
    assert!(summary["final_error"].as_f64().unwrap() < 0.5);
    assert!(summary["final_residuals"]["composite"].as_f64().unwrap() < 0.5);
    assert_eq!(summary["inner_tolerance"].as_f64().unwrap(), 1e-11);
}

fn compare_fixture(dir: &Path, with_bifunction: bool) -> String {
    let bifunction = if with_bifunction {
        r#""bifunction": {"kind": "linear", "g": {"kind": "scaled_identity", "factor": 0.5}},"#
    } else {
        ""
    };
    format!(
        r#"{{
  "seed": 7,
  "problem": {{
    "generator": "inline",
    "set": {{"kind": "box", "lo": [-2.0, -2.0], "hi": [2.0, 2.0]}},
    {bifunction}
    "operators": {{
      "vi": {{"kind": "zero"}},
      "gmep": {{"kind": "zero"}},
      "guide": {{"kind": "identity"}},
      "viscosity": {{"kind": "affine", "matrix": [[0.5, 0.0], [0.0, 0.5]], "offset": [-0.4, -0.4]}},
      "regularizer": {{"kind": "identity"}}
    }},
    "target": {{"op": {{"kind": "identity"}}}},
    "strengths": {{"mu": 1.0, "rho": 0.25, "gamma": 0.5, "eta": 1.0, "lipschitz": 1.0}},
    "variant": "full",
    "x1": [1.5, 1.5]
  }},
  "schedule": {{
    "alpha": {{"kind": "power_law", "c": 1.0, "p": 1.0, "n0": 1.0}},
    "beta": {{"kind": "constant", "c": 0.0}},
    "lambda": {{"kind": "constant", "c": 1.0}},
    "r": {{"kind": "constant", "c": 1.0}},
    "a": {{"kind": "constant", "c": 0.0}}
  }},
  "stopping": {{"max_iters": 100}},
  "outputs": {{"trace_path": "{dir}/paired.csv", "summary_path": "{dir}/compare.json"}},
  "compare": {{"variants": ["full", "ceng"]}}
}}"#,
        dir = dir.display()
    )
}

#[test]
fn compare_full_vs_stationary_matches() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "cmp.json", &compare_fixture(dir.path(), false));
    let out = run_cli(&["compare", "--config", config.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("compare.json")).unwrap())
            .unwrap();
    let dev = summary["max_deviation"].as_f64().unwrap();
    assert!(dev <= 1e-12, "max deviation {dev}");
    assert_eq!(summary["n_final"], 100);

    let paired = fs::read_to_string(dir.path().join("paired.csv")).unwrap();
    let header = paired.lines().next().unwrap();
    assert!(header.starts_with("n,step_norm_a,"));
    assert!(header.ends_with(",deviation"));
    assert_eq!(paired.lines().count(), 101);
}

#[test]
fn compare_with_bifunction_is_structurally_incompatible() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "cmp.json", &compare_fixture(dir.path(), true));
    let out = run_cli(&["compare", "--config", config.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn diverging_run_exits_four_with_outputs_written() {
    let dir = TempDir::new().unwrap();
    // unbounded set with an explosively expanding target; only reachable
    // under --force since the target-step validation rejects it
    let config = write_config(
        dir.path(),
        "div.json",
        &format!(
            r#"{{
  "seed": 1,
  "problem": {{
    "generator": "inline",
    "set": {{"kind": "whole_space", "dim": 1}},
    "operators": {{
      "vi": {{"kind": "zero"}},
      "gmep": {{"kind": "zero"}},
      "guide": {{"kind": "identity"}},
      "viscosity": {{"kind": "zero"}},
      "regularizer": {{"kind": "identity"}}
    }},
    "target": {{"op": {{"kind": "scaled_identity", "factor": 1e200}}}},
    "strengths": {{"mu": 1.0, "rho": 0.0, "gamma": 0.0, "eta": 1.0, "lipschitz": 1.0}},
    "variant": "full",
    "x1": [1.0],
    "coercivity_declared": true
  }},
  "stopping": {{"max_iters": 50}},
  "outputs": {{"trace_path": "{dir}/t.csv", "summary_path": "{dir}/s.json"}}
}}"#,
            dir = dir.path().display()
        ),
    );
    let out = run_cli(&["run", "--config", config.to_str().unwrap(), "--force"]);
    assert_eq!(
        out.status.code(),
        Some(4),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "diverged");
    assert!(summary["diverged_at"].as_u64().is_some());
    assert!(dir.path().join("t.csv").exists());
}

#[test]
fn compare_without_section_exits_two() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "sel.json", &selection_config(dir.path(), 10));
    let out = run_cli(&["compare", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
