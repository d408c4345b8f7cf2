//! End-to-end runs of the `symcoord` binary.

use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn symcoord(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symcoord"))
        .args(args)
        .env_remove("SYMCOORD_SEED")
        .output()
        .expect("binary runs")
}

fn with_stdin(args: &[&str], input: &[u8]) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_symcoord"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary spawns");
    child.stdin.take().expect("piped").write_all(input).expect("stdin accepts");
    child.wait_with_output().expect("binary exits")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

#[test]
fn expand_u_two_variables() {
    let out = symcoord(&["expand-u", "--N", "2", "--r", "2", "--basis", "x"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "nvars=2\n-1/8 : 2 0\n1/4 : 1 1\n-1/8 : 0 2\n");
}

#[test]
fn expand_u_etilde_form() {
    let out = symcoord(&["expand-u", "--N", "4", "--r", "3", "--basis", "etilde"]);
    assert_eq!(stdout(&out), "1/1 : et[3]\n-1/1 : et[2,1]\n1/3 : et[1,1,1]\n");
}

#[test]
fn duality_matrix_is_identity() {
    let out = symcoord(&["check-duality", "--N", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["pass"], true);
    for d in 0..4 {
        for r in 0..4 {
            assert_eq!(v["matrix"][d][r], i64::from(d == r));
        }
    }
}

#[test]
fn expand_then_apply_is_one_in_every_normalization() {
    for tag in ["paper", "hat", "signed-power", "taylor"] {
        for (n, r) in [(2, 1), (3, 2), (4, 3), (4, 4)] {
            let (n, r) = (n.to_string(), r.to_string());
            let u = symcoord(&["--normalization", tag, "expand-u", "--N", &n, "--r", &r]);
            let image = with_stdin(&["--normalization", tag, "apply-D", "--d", &r], &u.stdout);
            assert_eq!(image.status.code(), Some(0), "{tag} N={n} r={r}");
            let expected = format!("nvars={n}\n1/1 :{}\n", " 0".repeat(n.parse().unwrap()));
            assert_eq!(stdout(&image), expected, "{tag} N={n} r={r}");
        }
    }
}

#[test]
fn apply_d_rejects_mismatched_arity() {
    let u = symcoord(&["expand-u", "--N", "3", "--r", "2"]);
    let out = with_stdin(&["apply-D", "--N", "4", "--d", "2"], &u.stdout);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn decay_table_small() {
    let out = symcoord(&["decay-table", "--rmax", "3"]);
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.ends_with("\tmeets")));
}

#[test]
fn derivative_constant_prints_coefficient_lists() {
    let out = symcoord(&["derivative-constant", "--r", "3", "--sigma", "[2,1]"]);
    assert_eq!(stdout(&out), "[-2] / [0, 0, 0, -1, 1]\n");
    let bad = symcoord(&["derivative-constant", "--r", "4", "--sigma", "[2,1]"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn diag_combo_constructions_agree() {
    let v = json(&symcoord(&["diag-combo", "--g", "3"]));
    assert_eq!(v["constructions_agree"], true);
    assert_eq!(v["terms"]["[3]"], "1/2");
    assert_eq!(v["terms"]["[2,1]"], "-3/2");
    assert_eq!(v["terms"]["[1,1,1]"], "1");
}

#[test]
fn eval_d_reports_pattern_and_branch() {
    let exact = json(&symcoord(&["eval-D", "--N", "3", "--d", "2", "--point", "1,1,2", "--trace-poly", "0,0,0,1"]));
    assert_eq!(exact["pattern"], "{1,2}{3}");
    assert_eq!(exact["branch"], "one-block");
    assert_eq!(exact["exact"], true);
    assert_eq!(exact["value"], "-48");

    let float = json(&symcoord(&["eval-D", "--N", "3", "--d", "2", "--point", "1.0,1.0,2.0", "--trace-poly", "0,0,0,1"]));
    assert_eq!(float["exact"], false);
    assert!((float["value"].as_f64().unwrap() + 48.0).abs() < 1e-9);

    let total = json(&symcoord(&["eval-D", "--N", "3", "--d", "3", "--point", "2,2,2"]));
    assert_eq!(total["branch"], "total-diagonal");
}

#[test]
fn limit_check_two_variable_example() {
    let v = json(&symcoord(&["limit-check", "--N", "2", "--J", "1,2", "--I", "1,2", "--phi", "p:[2]"]));
    assert_eq!(v["pass"], true);
    assert_eq!(v["value_formula"], -2.0);
    assert_eq!(v["value_reference"], -2.0);
}

#[test]
fn jacobian_check_passes_and_seed_env_wins() {
    let out = symcoord(&["jacobian-check", "--N", "3", "--count", "3", "--seed", "5", "--phi", "e:[2,1]"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["seed"], 5);

    let env = Command::new(env!("CARGO_BIN_EXE_symcoord"))
        .args(["jacobian-check", "--N", "2", "--count", "1", "--seed", "5"])
        .env("SYMCOORD_SEED", "11")
        .output()
        .unwrap();
    assert_eq!(json(&env)["seed"], 11);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(symcoord(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(symcoord(&["check-duality", "--bogus"]).status.code(), Some(2));
    assert_eq!(symcoord(&["--normalization", "weird", "check-duality", "--N", "2"]).status.code(), Some(2));
}

#[test]
fn format_override_wraps_text() {
    let out = symcoord(&["--format", "json", "expand-u", "--N", "2", "--r", "1"]);
    let v = json(&out);
    assert_eq!(v["status"], "report");
    assert!(v["payload"].as_str().unwrap().starts_with("nvars=2"));
}

#[test]
fn parallel_jobs_give_identical_output() {
    let one = symcoord(&["--jobs", "1", "decay-table", "--rmax", "5"]);
    let four = symcoord(&["--jobs", "4", "decay-table", "--rmax", "5"]);
    assert_eq!(one.stdout, four.stdout);
}
