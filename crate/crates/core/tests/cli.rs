use std::process::{Command, Output};

use crtractor::cli::{parse_op, Params};
use crtractor::heisenberg::{Signature, Weight};
use crtractor::invariant_ops::{build_invariant_operator, IndexPattern};
use crtractor::structures::PhStructure;
use crtractor::tractor::Tractor;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crtractor")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8")
}

#[test]
fn passing_suite_exits_zero_with_json_report() {
    let o = run(&["verify", "q3d", "--n", "1", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["suite"], "q3d");
    assert_eq!(r["passed"], true);
    assert_eq!(r["params"]["seed"], 7);
    let checks = r["checks"].as_array().unwrap();
    assert!(checks.len() >= 4);
    assert!(checks.iter().all(|c| c["status"] == "pass" && c["anchor"] == "CRQ"));
}

#[test]
fn suite_flag_matches_positional_suite() {
    let strip =
        |o: &Output| stdout(o).lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).map(str::to_string).collect::<Vec<_>>();
    let a = run(&["verify", "transform-laws"]);
    let b = run(&["verify", "--suite", "transform-laws"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["verify", "nonsense"]).status.code(), Some(2));
    assert_eq!(run(&["verify"]).status.code(), Some(2));
    let o = run(&["op-print", "--w", "1/2", "--wp", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("integral"));
    let o = run(&["verify", "dencomm", "--upsilon", "z1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("conjugate"));
    assert_eq!(run(&["verify", "dencomm", "--n", "2", "--signature", "+"]).status.code(), Some(2));
}

#[test]
fn forbidden_weights_cite_the_hypothesis() {
    let o = run(&["op-print", "--w", "0", "--wp", "1", "--pattern", "bb"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not in N0 x N0"));
}

#[test]
fn op_print_json_round_trips() {
    let o = run(&["op-print", "--w", "2", "--wp", "-2", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let op = parse_op(&stdout(&o), 1).unwrap();
    let tr = Tractor::new(&PhStructure::flat(&Signature::definite(1)));
    let w = Weight::ints(2, -2);
    assert_eq!(op, build_invariant_operator(&tr, &w, &IndexPattern::default_for(&w, 2)).unwrap());
    let again = run(&["op-print", "--w", "2", "--wp", "-2", "--format", "json"]);
    assert_eq!(stdout(&o), stdout(&again));
}

#[test]
fn special_path_prints_p00() {
    let o = run(&["op-print", "--w", "0", "--wp", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("E(0,0) -> E(-2,-2)"));
}

#[test]
fn zero_degree_matrix_is_one_by_one() {
    let o = run(&["matrix", "--w", "0", "--wp", "0", "--degree", "0", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let m: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(m["basis"].as_array().unwrap().len(), 1);
    assert_eq!(m["entries"][0][0]["re"], "0");
    assert_eq!(m["folland_stein"], serde_json::json!(["1", "-1"]));
}

#[test]
fn reports_are_deterministic() {
    let p = Params::new(1);
    let a = crtractor::cli::cmd_verify(crtractor::cli::Suite::Dencomm, &p).unwrap();
    let b = crtractor::cli::cmd_verify(crtractor::cli::Suite::Dencomm, &p).unwrap();
    let strip = |r: &crtractor::cli::Report| serde_json::to_value(&r.checks).unwrap();
    assert_eq!(strip(&a), strip(&b));
}
