mod common;

use std::fs;
use std::process::{Command, Output};

use common::{benchmarks, solver};

fn quic3(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quic3")).args(args).output().expect("run quic3")
}

fn bench(name: &str) -> String {
    benchmarks().join(name).display().to_string()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

const CHC_COUNTER: &str = "
(set-logic HORN)
(declare-fun inv (Int Int) Bool)
(assert (forall ((x Int) (n Int)) (=> (and (= x 0) (> n 0)) (inv x n))))
(assert (forall ((x Int) (n Int) (y Int)) (=> (and (inv x n) (< x n) (= y (+ x 1))) (inv y n))))
(assert (forall ((x Int) (n Int)) (=> (and (inv x n) (> x n)) false)))
(check-sat)
";

#[test]
fn exit_codes() {
    if solver().is_none() {
        return;
    }
    assert_eq!(code(&quic3(&[&bench("counter_safe.tsys")])), 0);
    let cex = quic3(&[&bench("counter_step.tsys")]);
    assert_eq!(code(&cex), 1);
    assert!(String::from_utf8_lossy(&cex.stdout).starts_with("unsafe"));
    assert_eq!(code(&quic3(&[&bench("std_copy2.tsys"), "--max-depth", "2"])), 2);
}

#[test]
fn input_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.tsys");
    fs::write(&bad, "(declare-state x Int) (init (= y 0))").unwrap();
    assert_eq!(code(&quic3(&[bad.to_str().unwrap()])), 3);
    assert_eq!(code(&quic3(&["/nonexistent/problem.tsys"])), 3);
    assert_eq!(code(&quic3(&[&bench("counter_safe.tsys"), "--max-depth", "0"])), 3);
    assert_eq!(code(&quic3(&[&bench("counter_safe.tsys"), "--qgen", "sometimes"])), 3);
    assert_eq!(code(&quic3(&[])), 3);
    assert_eq!(code(&quic3(&["--help"])), 0);
}

#[test]
fn json_output() {
    if solver().is_none() {
        return;
    }
    let o = quic3(&[&bench("init_array.tsys"), "--qgen", "both", "--json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).expect("json");
    assert_eq!(v["result"], "safe");
    assert!(v["stats"]["lemmas"].as_u64().unwrap() > 0);

    let o = quic3(&[&bench("counter_step.tsys"), "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).expect("json");
    assert_eq!(v["result"], "unsafe");
    assert_eq!(v["length"], 4);
    assert_eq!(v["trace"].as_array().unwrap().len(), 5);
}

#[test]
fn emitted_invariant_is_smtlib() {
    let Some(z3) = common::find() else { return };
    let dir = tempfile::tempdir().unwrap();
    let inv = dir.path().join("inv.smt2");
    let o = quic3(&[&bench("init_array.tsys"), "--qgen", "both", "--emit-invariant", inv.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(&inv).unwrap();
    assert!(text.contains("forall"), "{text}");
    // the invariant is consistent on its own
    let check = dir.path().join("check.smt2");
    fs::write(&check, format!("{text}\n(check-sat)\n")).unwrap();
    let out = Command::new(z3).arg(&check).output().unwrap();
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("sat"), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn horn_clause_input() {
    if solver().is_none() {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let smt2 = dir.path().join("counter.smt2");
    fs::write(&smt2, CHC_COUNTER).unwrap();
    assert_eq!(code(&quic3(&[smt2.to_str().unwrap()])), 0);
    let other = dir.path().join("counter.horn");
    fs::write(&other, CHC_COUNTER).unwrap();
    assert_eq!(code(&quic3(&[other.to_str().unwrap(), "--chc"])), 0);
    // without --chc the native parser rejects it
    assert_eq!(code(&quic3(&[other.to_str().unwrap()])), 3);
}

#[test]
fn validate_and_event_log() {
    if solver().is_none() {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("events.jsonl");
    let o = quic3(&[&bench("init_array.tsys"), "--qgen", "both", "--validate", "--event-log", log.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.matches(": Certified").count(), 3, "{err}");
    let events = fs::read_to_string(&log).unwrap();
    assert!(events.lines().count() > 0);
    for l in events.lines() {
        let _: serde_json::Value = serde_json::from_str(l).expect("one json object per line");
    }

    let o = quic3(&[&bench("counter_step.tsys"), "--validate"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("replay: Certified"));
}

#[test]
fn enumeration_backend() {
    let o = quic3(&[&bench("counter_step.tsys"), "--backend", "enumeration:-8..8"]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
}
