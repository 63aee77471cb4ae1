//! End-to-end tests of the `eqodds` binary: exit codes, document shape,
//! and reproducibility of every subcommand.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_eqodds"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary should run")
}

fn stdout_text(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is utf-8")
}

fn stderr_text(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is utf-8")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "expected success, got {:?} with stderr: {}",
        out.status.code(),
        stderr_text(out)
    );
}

const FIXTURE_CSV: &str = "group,score,label\n\
a,0.9,1\n\
a,0.8,1\n\
a,0.7,1\n\
a,0.4,0\n\
a,0.3,0\n\
a,0.2,0\n\
b,0.85,1\n\
b,0.6,1\n\
b,0.5,0\n\
b,0.35,1\n\
b,0.25,0\n\
b,0.15,0\n";

fn write_fixture(dir: &TempDir) -> PathBuf {
    let path = dir.path().join("data.csv");
    fs::write(&path, FIXTURE_CSV).expect("fixture written");
    path
}

fn read_json(path: &Path) -> Value {
    let text = fs::read_to_string(path).expect("json file exists");
    serde_json::from_str(&text).expect("valid json")
}

#[test]
fn calibrated_threshold_prints_the_cost_ratio() {
    let out = run(&["calibrated-threshold", "--fp-cost", "1", "--fn-cost", "1"]);
    assert_ok(&out);
    assert_eq!(stdout_text(&out), "0.5\n");

    let out = run(&["calibrated-threshold", "--fp-cost", "1", "--fn-cost", "3"]);
    assert_ok(&out);
    assert_eq!(stdout_text(&out), "0.25\n");
}

#[test]
fn missing_arguments_exit_with_the_usage_code() {
    let out = run(&["fit"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_alpha_exits_with_the_usage_code() {
    let dir = TempDir::new().unwrap();
    let data = write_fixture(&dir);
    let out = run(&["fit", "--data", data.to_str().unwrap(), "--alpha", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_text(&out).starts_with("error:"));
}

#[test]
fn invalid_costs_exit_with_the_usage_code() {
    let out = run(&["calibrated-threshold", "--fp-cost", "0", "--fn-cost", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_text(&out).starts_with("error:"));
}

#[test]
fn missing_data_file_exits_with_the_data_code() {
    let out = run(&[
        "fit",
        "--data",
        "/definitely/not/here.csv",
        "--alpha",
        "0.1",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_text(&out).starts_with("error:"));
}

#[test]
fn malformed_rows_exit_with_the_data_code() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "group,score,label\na,not-a-number,1\n").unwrap();
    let out = run(&["fit", "--data", path.to_str().unwrap(), "--alpha", "0.1"]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr_text(&out);
    assert!(err.starts_with("error:"), "diagnostic missing: {err}");
}

#[test]
fn fit_emits_a_versioned_document_with_certificates() {
    let dir = TempDir::new().unwrap();
    let data = write_fixture(&dir);
    let sol_path = dir.path().join("solution.json");
    let out = run(&[
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--alpha",
        "0.1",
        "--out",
        sol_path.to_str().unwrap(),
    ]);
    assert_ok(&out);

    let doc = read_json(&sol_path);
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["config"]["command"], "fit");
    assert_eq!(doc["config"]["alpha"], 0.1);
    assert_eq!(doc["config"]["fp_cost"], 1.0);
    assert_eq!(doc["config"]["fn_cost"], 1.0);
    assert_eq!(doc["config"]["seed"], 42);
    assert_eq!(doc["config"]["format"], "auto");
    assert_eq!(
        doc["config"]["data"],
        Value::String(data.to_str().unwrap().to_string())
    );

    let solution = &doc["solution"];
    assert_eq!(solution["alpha_requested"], 0.1);
    let certified = solution["certified_alpha"].as_f64().unwrap();
    assert!(certified <= 0.1 + 1e-6, "certified {certified}");
    for group in ["a", "b"] {
        let mixture = solution["groups"][group]["mixture"].as_array().unwrap();
        assert!(!mixture.is_empty());
        let total: f64 = mixture.iter().map(|e| e["weight"].as_f64().unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-9, "weights sum to {total}");
    }
}

#[test]
fn eval_of_the_fit_solution_reproduces_its_certificates() {
    let dir = TempDir::new().unwrap();
    let data = write_fixture(&dir);
    let sol_path = dir.path().join("solution.json");
    let eval_path = dir.path().join("eval.json");
    assert_ok(&run(&[
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--alpha",
        "0.08",
        "--out",
        sol_path.to_str().unwrap(),
    ]));
    assert_ok(&run(&[
        "eval",
        "--data",
        data.to_str().unwrap(),
        "--solution",
        sol_path.to_str().unwrap(),
        "--out",
        eval_path.to_str().unwrap(),
    ]));

    let sol = read_json(&sol_path);
    let eval = read_json(&eval_path);
    assert_eq!(eval["schema_version"], 1);
    assert_eq!(eval["config"]["command"], "eval");

    let recorded_loss = sol["solution"]["expected_loss"].as_f64().unwrap();
    let recorded_alpha = sol["solution"]["certified_alpha"].as_f64().unwrap();
    let replayed_loss = eval["report"]["expected_loss"].as_f64().unwrap();
    let replayed_violation = eval["report"]["violation"].as_f64().unwrap();
    assert!(
        (replayed_loss - recorded_loss).abs() <= 1e-9,
        "loss drifted: {recorded_loss} vs {replayed_loss}"
    );
    assert!(
        (replayed_violation - recorded_alpha).abs() <= 1e-9,
        "violation drifted: {recorded_alpha} vs {replayed_violation}"
    );
}

#[test]
fn corrupt_solution_file_exits_with_the_data_code() {
    let dir = TempDir::new().unwrap();
    let data = write_fixture(&dir);
    let sol_path = dir.path().join("solution.json");
    fs::write(&sol_path, "{ not json").unwrap();
    let out = run(&[
        "eval",
        "--data",
        data.to_str().unwrap(),
        "--solution",
        sol_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_text(&out).starts_with("error:"));
}

#[test]
fn unprocess_reports_an_unbounded_slack() {
    let dir = TempDir::new().unwrap();
    let data = write_fixture(&dir);
    let out_path = dir.path().join("unprocessed.json");
    assert_ok(&run(&[
        "unprocess",
        "--data",
        data.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]));
    let doc = read_json(&out_path);
    assert_eq!(doc["config"]["command"], "unprocess");
    assert_eq!(doc["solution"]["alpha_requested"], "inf");
    for group in ["a", "b"] {
        let mixture = doc["solution"]["groups"][group]["mixture"]
            .as_array()
            .unwrap();
        assert_eq!(mixture.len(), 1, "unprocessing is deterministic");
        assert_eq!(mixture[0]["weight"], 1.0);
    }
}

#[test]
fn sweep_writes_the_frontier_on_the_requested_grid() {
    let dir = TempDir::new().unwrap();
    let data = write_fixture(&dir);
    let out_path = dir.path().join("frontier.csv");
    assert_ok(&run(&[
        "sweep",
        "--data",
        data.to_str().unwrap(),
        "--grid-step",
        "0.5",
        "--alpha-max",
        "1.0",
        "--out",
        out_path.to_str().unwrap(),
    ]));
    let text = fs::read_to_string(&out_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some(
            "alpha,accuracy,violation,expected_loss,\
             accuracy_p2_5,accuracy_p97_5,violation_p2_5,violation_p97_5"
        )
    );
    let alphas: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(alphas, ["0", "0.5", "1"]);
}

#[test]
fn predict_writes_one_decision_per_row() {
    let dir = TempDir::new().unwrap();
    let data = write_fixture(&dir);
    let sol_path = dir.path().join("solution.json");
    let pred_path = dir.path().join("predictions.csv");
    assert_ok(&run(&[
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--alpha",
        "0.05",
        "--out",
        sol_path.to_str().unwrap(),
    ]));
    assert_ok(&run(&[
        "predict",
        "--data",
        data.to_str().unwrap(),
        "--solution",
        sol_path.to_str().unwrap(),
        "--out",
        pred_path.to_str().unwrap(),
    ]));
    let text = fs::read_to_string(&pred_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "row_index,group,score,prediction,threshold_drawn");
    assert_eq!(lines.len(), 13, "header plus one line per input row");
    for line in &lines[1..] {
        let prediction = line.split(',').nth(3).unwrap();
        assert!(prediction == "0" || prediction == "1");
    }
}

#[test]
fn select_prefers_the_more_accurate_candidate() {
    let dir = TempDir::new().unwrap();
    let good = dir.path().join("good.csv");
    let bad = dir.path().join("bad.csv");
    // Same rows, but the second model's scores carry no signal.
    let mut good_text = String::from("group,score,label\n");
    let mut bad_text = String::from("group,score,label\n");
    for group in ["a", "b"] {
        for i in 0..6 {
            let label = u8::from(i < 3);
            let score = if label == 1 { 0.9 } else { 0.1 };
            good_text.push_str(&format!("{group},{score},{label}\n"));
            bad_text.push_str(&format!("{group},0.5,{label}\n"));
        }
    }
    fs::write(&good, good_text).unwrap();
    fs::write(&bad, bad_text).unwrap();

    let out_path = dir.path().join("selection.json");
    assert_ok(&run(&[
        "select",
        "--model",
        &format!("informative={}", good.display()),
        "--model",
        &format!("constant={}", bad.display()),
        "--out",
        out_path.to_str().unwrap(),
    ]));
    let doc = read_json(&out_path);
    assert_eq!(doc["selection"]["winner"], "informative");
    let candidates = doc["selection"]["candidates"].as_array().unwrap();
    assert_eq!(candidates.len(), 2);
}

#[test]
fn malformed_model_specs_exit_with_the_usage_code() {
    let out = run(&["select", "--model", "no-equals-sign"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_text(&out).starts_with("error:"));
}

#[test]
fn json_input_is_inferred_from_the_extension() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("data.json");
    let rows: Vec<Value> = FIXTURE_CSV
        .lines()
        .skip(1)
        .map(|line| {
            let mut parts = line.split(',');
            let group = parts.next().unwrap();
            let score: f64 = parts.next().unwrap().parse().unwrap();
            let label: u8 = parts.next().unwrap().parse().unwrap();
            serde_json::json!({"group": group, "score": score, "label": label})
        })
        .collect();
    fs::write(&path, serde_json::to_string(&rows).unwrap()).unwrap();

    let sol_path = dir.path().join("solution.json");
    assert_ok(&run(&[
        "fit",
        "--data",
        path.to_str().unwrap(),
        "--alpha",
        "0.1",
        "--out",
        sol_path.to_str().unwrap(),
    ]));
    let doc = read_json(&sol_path);
    assert_eq!(doc["config"]["format"], "auto");
    assert!(doc["solution"]["expected_loss"].as_f64().is_some());
}

#[test]
fn outputs_are_byte_identical_across_reruns() {
    let dir = TempDir::new().unwrap();
    let data = write_fixture(&dir);
    let data_arg = data.to_str().unwrap().to_string();

    // The config echo embeds the output path, so byte identity requires
    // truly identical flags: write to the same path and capture in between.
    let sol_path = dir.path().join("solution.json");
    let fit_args = [
        "fit",
        "--data",
        &data_arg,
        "--alpha",
        "0.07",
        "--seed",
        "9",
        "--out",
        sol_path.to_str().unwrap(),
    ];
    assert_ok(&run(&fit_args));
    let first = fs::read(&sol_path).unwrap();
    assert_ok(&run(&fit_args));
    assert_eq!(
        first,
        fs::read(&sol_path).unwrap(),
        "fit output differs between identical runs"
    );

    let frontier_path = dir.path().join("frontier.csv");
    let sweep_args = [
        "sweep",
        "--data",
        &data_arg,
        "--grid-step",
        "0.05",
        "--alpha-max",
        "0.2",
        "--bootstrap-n",
        "25",
        "--seed",
        "17",
        "--out",
        frontier_path.to_str().unwrap(),
    ];
    assert_ok(&run(&sweep_args));
    let first = fs::read(&frontier_path).unwrap();
    assert_ok(&run(&sweep_args));
    assert_eq!(
        first,
        fs::read(&frontier_path).unwrap(),
        "sweep output differs between identical runs"
    );
}
