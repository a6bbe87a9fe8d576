use std::process::Command;

use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("critlen").chain(args.iter().copied());
    let code = critlen::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(s: &str) -> Value {
    serde_json::from_str(s).expect("output is JSON")
}

#[test]
fn first_zero_of_sine() {
    let (code, out, _) = run(&["zeros", "--nu", "0.5", "--count", "1"]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["data"][0]["index"], 1);
    let x = v["data"][0]["value"].as_f64().unwrap();
    assert!((x - std::f64::consts::PI).abs() < 1e-12);
    assert_eq!(v["meta"]["tool"], "critlen");
    assert_eq!(v["meta"]["config"]["command"]["zeros"]["count"], 1);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let (code, out, err) = run(&["zeros", "--nu", "1", "--bogus"]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.contains("Usage"), "{err}");
}

#[test]
fn non_decimal_number_is_a_usage_error() {
    let (code, _, _) = run(&["fn", "eval", "--n", "2", "--x", "0x10"]);
    assert_eq!(code, 2);
}

#[test]
fn verify_all_spherical_two() {
    let (code, out, err) = run(&["verify", "--identity", "all", "--model", "spherical:2", "--range", "0.01:30", "--points", "500"]);
    assert_eq!(code, 0, "{err}");
    let v = json(&out);
    let reports = v["data"].as_array().unwrap();
    assert_eq!(reports.len(), 19);
    for r in reports {
        assert_eq!(r["pass"], true, "{r}");
    }
    assert_eq!(reports[0]["identity"], "prop1");
}

#[test]
fn impossible_tolerance_fails_with_exit_one() {
    let (code, out, _) = run(&["verify", "--identity", "prop1", "--model", "bessel:2", "--points", "20", "--tol", "1e-300"]);
    assert_eq!(code, 1);
    assert_eq!(json(&out)["data"][0]["status"], "fail");
}

#[test]
fn unknown_identity_is_a_usage_error() {
    let (code, _, err) = run(&["verify", "--identity", "prop7", "--model", "spherical:2"]);
    assert_eq!(code, 2);
    assert!(err.contains("prop7"));
}

#[test]
fn missing_bracket_is_a_numerical_failure() {
    let (code, _, err) = run(&["zeros", "--nu", "0.5", "--count", "3", "--cap", "4"]);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn critlen_json_and_table() {
    let (code, out, _) = run(&["critlen", "--n", "1"]);
    assert_eq!(code, 0);
    let v = json(&out);
    let est = v["data"]["estimate"].as_f64().unwrap();
    assert!((est - 4.4934094579).abs() < 1e-8);
    assert_eq!(v["data"]["per_j"][0]["status"], "no-zero-within-cap");
    let (code, out, _) = run(&["critlen", "--n", "1", "--format", "table"]);
    assert_eq!(code, 0);
    assert!(out.contains("consistent true"));
}

#[test]
fn fn_show_and_eval() {
    let (code, out, _) = run(&["fn", "show", "--n", "1"]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["data"]["f"], serde_json::json!({"1": {"cos": ["0/1", "-1/1"], "sin": ["1/1"]}}));
    let (code, out, _) = run(&["fn", "eval", "--n", "0", "--x", "1", "--deriv", "1"]);
    assert_eq!(code, 0);
    let vals = json(&out)["data"]["values"].clone();
    assert!((vals[0].as_f64().unwrap() - 1f64.sin()).abs() < 1e-15);
    assert!((vals[1].as_f64().unwrap() - 1f64.cos()).abs() < 1e-15);
}

#[test]
fn scan_csv_columns() {
    let (code, out, _) = run(&["scan", "--what", "minor", "--n", "2", "--j", "5", "--range", "1:9", "--points", "9", "--format", "csv"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "x,value,sign");
    assert_eq!(lines.len(), 10);
    // f_2 changes sign between 5 and 6
    assert!(lines[5].ends_with(",1") && lines[6].ends_with(",-1"), "{out}");
}

#[test]
fn scan_minor_needs_j() {
    let (code, _, _) = run(&["scan", "--what", "minor", "--n", "2", "--range", "1:2"]);
    assert_eq!(code, 2);
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let exe = env!("CARGO_BIN_EXE_critlen");
    let args = ["verify", "--model", "bessel:3.4", "--points", "60"];
    let outputs: Vec<Vec<u8>> = ["1", "4", "4"]
        .iter()
        .map(|t| {
            let o = Command::new(exe).args(args).env("CRITLEN_THREADS", t).output().unwrap();
            assert!(o.status.success());
            o.stdout
        })
        .collect();
    assert_eq!(outputs[1], outputs[2]);
    let strip = |b: &[u8]| {
        let mut v = json(std::str::from_utf8(b).unwrap());
        v["meta"]["threads"] = Value::Null;
        v
    };
    assert_eq!(strip(&outputs[0]), strip(&outputs[1]));
    assert_eq!(json(std::str::from_utf8(&outputs[1]).unwrap())["meta"]["threads"], 4);
}

#[test]
fn bad_thread_env_is_a_usage_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_critlen"))
        .args(["critlen", "--n", "0"])
        .env("CRITLEN_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
