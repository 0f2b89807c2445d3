use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multistop"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut full = args.to_vec();
    full.extend(["--format", "json"]);
    serde_json::from_str(&stdout(&full)).expect("valid JSON")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn lambda_table_golden() {
    let text = stdout(&["lambda", "--m", "3"]);
    assert!(text.contains("11/24"));
    assert!(text.contains("47/24"));
    assert!(text.ends_with("bound (m = 3)  0.7321029820\n"));
}

#[test]
fn lambda_csv_golden() {
    assert_eq!(
        stdout(&["lambda", "--m", "2", "--format", "csv"]),
        "k,lambda,lambda_decimal,cumsum,cumsum_decimal,bound_term\n\
         1,1,1.000000,1,1.000000,0.3678794411\n\
         2,1/2,0.500000,3/2,1.500000,0.2231301601\n"
    );
}

#[test]
fn lambda_json_schema() {
    let v = json(&["lambda", "--m", "10"]);
    assert_eq!(v["m"], 10);
    assert_eq!(v["exact"], true);
    assert_eq!(v["lambda"].as_array().unwrap().len(), 10);
    assert_eq!(v["lambda"][3], "505/1152");
    assert_eq!(v["cumsum"][4], "4162637/1474560");
    assert_eq!(v["bound"], "0.9840603638");
    assert_eq!(v["bound_terms"].as_array().unwrap().len(), 10);
}

#[test]
fn lambda_approx_mode_agrees_with_exact_prefix() {
    let approx = json(&["lambda", "--m", "12", "--approx"]);
    let exact = json(&["lambda", "--m", "12"]);
    assert_eq!(approx["exact"], false);
    assert_eq!(approx["lambda_decimal"], exact["lambda_decimal"]);
    assert_eq!(approx["bound"], exact["bound"]);
}

#[test]
fn xi_listing_and_count() {
    assert_eq!(stdout(&["xi", "--k", "3"]), "(1,0,0)\n(0,2,0)\n(0,1,2)\n(0,0,3)\n");
    assert_eq!(stdout(&["xi", "--k", "6", "--count-only"]).trim(), "65");
    let v = json(&["xi", "--k", "4"]);
    assert_eq!(v["kind"], "xi");
    assert_eq!(v["vectors"].as_array().unwrap().len(), 9);
}

#[test]
fn winprob_formula_and_enumeration_agree() {
    let dir = tempfile::tempdir().unwrap();
    let seq = write(dir.path(), "s.json", r#"{"p":["1/3","1/2","2/5","1/4","3/7"]}"#);
    let a = json(&["winprob", "--sequence", &seq, "--thresholds", "2,4"]);
    let b = json(&[
        "winprob", "--sequence", &seq, "--thresholds", "2,4", "--method", "enumerate",
    ]);
    assert_eq!(a["value"], b["value"]);
}

#[test]
fn optimal_methods_agree() {
    let dir = tempfile::tempdir().unwrap();
    let seq = write(dir.path(), "s.json", r#"{"secretary":{"n":15}}"#);
    let values: Vec<Value> = ["exhaustive", "dp", "ola"]
        .iter()
        .map(|method| json(&["optimal", "--sequence", &seq, "--m", "2", "--method", method])["value"].clone())
        .collect();
    assert_eq!(values[0], values[1]);
    assert_eq!(values[1], values[2]);
}

#[test]
fn secretary_csv_has_row_per_size() {
    let text = stdout(&["secretary", "--n", "100,1000", "--m", "2", "--format", "csv"]);
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn verify_passes() {
    let v = json(&["verify", "--max-n", "7", "--cases", "30", "--seed", "9"]);
    assert!(v["failures"].as_array().unwrap().is_empty());
}

#[test]
fn simulate_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let seq = write(dir.path(), "s.json", r#"{"p":["1/2","1/2"]}"#);
    let args = [
        "simulate", "--sequence", &seq, "--thresholds", "1", "--trials", "5000", "--seed", "4", "--format", "json",
    ];
    assert_eq!(stdout(&args), stdout(&args));
    let other = [
        "simulate", "--sequence", &seq, "--thresholds", "1", "--trials", "5000", "--seed", "5", "--format", "json",
    ];
    assert_ne!(stdout(&args), stdout(&other));
}

#[test]
fn invalid_input_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let seq = write(dir.path(), "s.json", r#"{"p":["1/2","1/2"]}"#);
    let out = run(&["winprob", "--sequence", &seq, "--thresholds", "5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let bad = write(dir.path(), "bad.json", r#"{"p":["3/2"]}"#);
    assert_eq!(run(&["winprob", "--sequence", &bad, "--thresholds", "1"]).status.code(), Some(1));
    assert_eq!(run(&["xi", "--k", "99"]).status.code(), Some(1));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["lambda"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn budget_and_deadline_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let seq = write(dir.path(), "s.json", r#"{"secretary":{"n":40}}"#);
    let out = run(&["optimal", "--sequence", &seq, "--m", "3", "--method", "exhaustive"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(run(&["lambda", "--m", "40", "--timeout", "0"]).status.code(), Some(3));
}

#[test]
fn sequential_flag_gives_same_output() {
    let args = ["verify", "--max-n", "6", "--cases", "20", "--seed", "2", "--format", "json"];
    let mut seq_args = args.to_vec();
    seq_args.push("--sequential");
    assert_eq!(stdout(&args), stdout(&seq_args));
}
