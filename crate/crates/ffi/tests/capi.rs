use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use quic3_ffi::*;

const COUNTER: &str = "(declare-state x Int) (init (= x 0)) (trans (= x! (+ x 1))) (bad (= x 3))";
const STUCK: &str = "(declare-state x Int) (init (= x 0)) (trans (= x! x)) (bad (= x 3))";

fn have_solver() -> bool {
    quic3::smt::find_solver().is_ok()
}

fn parse(src: &str) -> *mut Quic3Problem {
    let src = CString::new(src).unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { quic3_problem_parse(src.as_ptr(), &mut p) }, Quic3Error::Ok);
    assert!(!p.is_null());
    p
}

fn last_error() -> String {
    let m = quic3_last_error_message();
    assert!(!m.is_null());
    unsafe { CStr::from_ptr(m) }.to_string_lossy().into_owned()
}

#[test]
fn parse_errors_are_reported() {
    let src = CString::new("(declare-state x Int) (init (= y 0))").unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { quic3_problem_parse(src.as_ptr(), &mut p) }, Quic3Error::Parse);
    assert!(p.is_null());
    assert!(!last_error().is_empty());
    // a successful call clears the message
    let ok = parse(COUNTER);
    assert!(quic3_last_error_message().is_null());
    assert_eq!(unsafe { quic3_problem_num_vars(ok) }, 1);
    unsafe { quic3_problem_free(ok) };
}

#[test]
fn null_arguments() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { quic3_problem_parse(ptr::null(), &mut p) }, Quic3Error::NullArgument);
    let src = CString::new(COUNTER).unwrap();
    assert_eq!(unsafe { quic3_problem_parse(src.as_ptr(), ptr::null_mut()) }, Quic3Error::NullArgument);
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { quic3_solve(ptr::null(), ptr::null(), &mut r) }, Quic3Error::NullArgument);
    unsafe {
        quic3_problem_free(ptr::null_mut());
        quic3_result_free(ptr::null_mut());
        quic3_string_free(ptr::null_mut());
        assert_eq!(quic3_result_verdict(ptr::null()), Quic3Verdict::Unknown);
        assert_eq!(quic3_result_cex_length(ptr::null()), -1);
    }
}

#[test]
fn invalid_utf8_and_config() {
    let bytes = [0xffu8, 0xfe, 0];
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { quic3_problem_parse(bytes.as_ptr().cast(), &mut p) }, Quic3Error::InvalidUtf8);
    let prob = parse(COUNTER);
    let mut opts = quic3_options_default();
    opts.max_depth = 0;
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { quic3_solve(prob, &opts, &mut r) }, Quic3Error::Config);
    assert!(last_error().contains("max depth"));
    let missing = CString::new("/nonexistent/solver").unwrap();
    let mut opts = quic3_options_default();
    opts.solver_path = missing.as_ptr();
    assert_eq!(unsafe { quic3_solve(prob, &opts, &mut r) }, Quic3Error::Solver);
    unsafe { quic3_problem_free(prob) };
}

#[test]
fn solve_unsafe_and_safe() {
    if !have_solver() {
        return;
    }
    let prob = parse(COUNTER);
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { quic3_solve(prob, ptr::null(), &mut r) }, Quic3Error::Ok);
    unsafe {
        assert_eq!(quic3_result_verdict(r), Quic3Verdict::Unsafe);
        assert_eq!(quic3_result_cex_length(r), 3);
        assert!(quic3_result_invariant_smt2(r).is_null());
        let j = quic3_result_json(r);
        let v: serde_json::Value = serde_json::from_str(CStr::from_ptr(j).to_str().unwrap()).unwrap();
        assert_eq!(v["result"], "unsafe");
        assert_eq!(v["length"], 3);
        quic3_string_free(j);
        quic3_result_free(r);
        quic3_problem_free(prob);
    }

    let prob = parse(STUCK);
    let mut opts = quic3_options_default();
    opts.qgen = Quic3Qgen::Both;
    assert_eq!(unsafe { quic3_solve(prob, &opts, &mut r) }, Quic3Error::Ok);
    unsafe {
        assert_eq!(quic3_result_verdict(r), Quic3Verdict::Safe);
        assert_eq!(quic3_result_cex_length(r), -1);
        assert!(quic3_result_depth(r) >= 1);
        let s = quic3_result_invariant_smt2(r);
        let text = CStr::from_ptr(s).to_str().unwrap().to_string();
        assert!(text.starts_with("(declare-fun x () Int)"), "{text}");
        quic3_string_free(s);
        quic3_result_free(r);
        quic3_problem_free(prob);
    }
}

#[test]
fn chc_input() {
    if !have_solver() {
        return;
    }
    let src = CString::new(
        "(declare-fun inv (Int) Bool)
         (assert (forall ((x Int)) (=> (= x 0) (inv x))))
         (assert (forall ((x Int)) (=> (and (inv x) (< x 5)) (inv (+ x 1)))))
         (assert (forall ((x Int)) (=> (and (inv x) (> x 5)) false)))",
    )
    .unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { quic3_problem_parse_chc(src.as_ptr(), &mut p) }, Quic3Error::Ok);
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { quic3_solve(p, ptr::null(), &mut r) }, Quic3Error::Ok);
    assert_eq!(unsafe { quic3_result_verdict(r) }, Quic3Verdict::Safe);
    unsafe {
        quic3_result_lemmas(r);
        quic3_result_free(r);
        quic3_problem_free(p);
    }
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/quic3.h")
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(header()).unwrap();
    for name in [
        "quic3_problem_parse",
        "quic3_problem_parse_chc",
        "quic3_problem_free",
        "quic3_solve",
        "quic3_result_verdict",
        "quic3_result_invariant_smt2",
        "quic3_result_json",
        "quic3_result_free",
        "quic3_string_free",
        "quic3_last_error_message",
        "typedef struct Quic3Problem Quic3Problem",
        "QUIC3_VERDICT_UNSAFE = 1",
    ] {
        assert!(h.contains(name), "missing {name}");
    }
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "quic3.h"

int main(void) {
    Quic3Problem *p = NULL;
    if (quic3_problem_parse("(declare-state x Int) (init (= x 0)) (trans (= x! (+ x 1))) (bad (= x 2))", &p) != QUIC3_ERROR_OK)
        return 10;
    Quic3Options o = quic3_options_default();
    o.max_depth = 8;
    Quic3Result *r = NULL;
    if (quic3_solve(p, &o, &r) != QUIC3_ERROR_OK) {
        fprintf(stderr, "%s\n", quic3_last_error_message());
        return 11;
    }
    int code = quic3_result_verdict(r) == QUIC3_VERDICT_UNSAFE && quic3_result_cex_length(r) == 2 ? 0 : 12;
    quic3_result_free(r);
    quic3_problem_free(p);
    return code;
}
"#;

fn cc() -> Option<&'static str> {
    ["cc", "gcc", "clang"].into_iter().find(|c| Command::new(c).arg("--version").output().is_ok())
}

#[test]
fn header_compiles_as_c() {
    let Some(cc) = cc() else { return };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let inc = header().parent().unwrap().to_path_buf();
    let st = Command::new(cc).args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"]).arg(&inc).arg(&src).status().unwrap();
    assert!(st.success());

    // link against the static library when cargo has produced one
    let target = Path::new(env!("CARGO_TARGET_TMPDIR")).parent().unwrap();
    let lib = [target.join("debug/libquic3_ffi.a"), target.join("release/libquic3_ffi.a")].into_iter().find(|p| p.is_file());
    let (Some(lib), true) = (lib, have_solver()) else { return };
    let exe = dir.path().join("main");
    let st = Command::new(cc)
        .arg("-I")
        .arg(&inc)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(st.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{:?} {}", out.status, String::from_utf8_lossy(&out.stderr));
}
