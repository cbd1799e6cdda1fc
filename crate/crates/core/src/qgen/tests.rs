use std::collections::BTreeSet;
use std::time::Duration;

use proptest::prelude::*;

use super::*;
use crate::smt::{find_solver, ExternalSolver};
use crate::term::sexp::parse_one;
use crate::term::{parse_term, Sort};

fn p(src: &str) -> Term {
    parse_term(&parse_one(src).unwrap(), &|s| {
        if s.starts_with("v!") || s.starts_with("sk!") {
            return None;
        }
        let (base, primed) = match s.strip_suffix('!') {
            Some(b) => (b, true),
            None => (s, false),
        };
        let sort = if base.starts_with('A') || base.starts_with('B') { Sort::Array } else { Sort::Int };
        Some(Term::cnst(&if primed { UConst::primed(base, sort) } else { UConst::state(base, sort) }))
    })
    .unwrap()
}

fn clause(src: &str) -> Clause {
    Clause::from_term(&p(src)).unwrap()
}

fn z3() -> Option<ExternalSolver> {
    let s = find_solver().ok().and_then(|path| ExternalSolver::new(path, Duration::from_secs(10)).ok());
    if s.is_none() {
        eprintln!("no SMT solver available; skipping");
    }
    s
}

#[test]
fn simple_worked_case() {
    let l = clause("(=> (< 0 sz) (= (select A 0) 42))");
    let c = simple_candidates(&l, &BTreeSet::new());
    assert_eq!(c.len(), 1);
    assert_eq!(c[0].body, clause("(=> (and (<= 0 v!0) (< v!0 sz)) (= (select A v!0) 42))"));
    assert_eq!(c[0].rho, [(0, Term::int(0))].into_iter().collect());
    assert!(well_formed(&l, &Substitution::new(), &c[0]));
}

#[test]
fn simple_fresh_variable_avoids_instance_domain() {
    let l = clause("(=> (< 0 sz) (= (select A 0) v!0))");
    let xi: Substitution = [(1, Term::int(7))].into_iter().collect();
    let c = simple_candidates(&l, &xi.domain());
    assert_eq!(c[0].rho.domain(), [2].into_iter().collect());
    assert!(well_formed(&l, &xi, &c[0]));
}

#[test]
fn simple_needs_a_mined_bound() {
    assert!(simple_candidates(&clause("(= (select A 0) 42)"), &BTreeSet::new()).is_empty());
    assert!(simple_candidates(&clause("(=> (< 0 sz) (= x 42))"), &BTreeSet::new()).is_empty());
}

#[test]
fn simple_offset_index() {
    // the offset constant of the index is abstracted: sel(A, i + v)
    let l = clause("(=> (and (< 1 n) (= i 3)) (= (select A (+ i 1)) 0))");
    let c = simple_candidates(&l, &BTreeSet::new());
    let offset = c.iter().find(|c| c.rho.get(0) == Some(&Term::int(1))).expect("offset candidate");
    assert!(offset.body.literals().iter().any(|t| t.contains(&p("(select A (+ i v!0))"))));
    assert!(well_formed(&l, &Substitution::new(), offset));
}

#[test]
fn arith_worked_case() {
    let l = clause("(=> (and (< 1 sz) (= (select A 0) 42)) (= (select A 1) 44))");
    let c = arith_qgen(&l, &BTreeSet::new()).expect("candidate");
    let expected = clause(
        "(=> (and (<= 0 v!0) (<= v!0 1) (= v!1 (+ (* 2 v!0) 42)) (< 1 sz) (= (select A 0) 42)) (= (select A v!0) v!1))",
    );
    assert_eq!(c.body, expected);
    assert_eq!(c.rho, [(0, Term::int(1)), (1, Term::int(44))].into_iter().collect());
    assert!(well_formed(&l, &Substitution::new(), &c));
}

#[test]
fn hull_examples() {
    let i = p("i");
    let j = p("j");
    let two = ch(&[vec![0, 42], vec![1, 44]]);
    assert_eq!(two.to_term(&[i.clone(), j.clone()]), p("(and (<= 0 i) (<= i 1) (= j (+ (* 2 i) 42)))"));
    let three = ch(&[vec![0, 42], vec![1, 44], vec![2, 46]]);
    assert_eq!(three.to_term(&[i.clone(), j.clone()]), p("(and (<= 0 i) (<= i 2) (= j (+ (* 2 i) 42)))"));
    let single = ch(&[vec![3, 5]]);
    assert_eq!(single.to_term(&[i.clone(), j.clone()]), p("(and (= i 3) (= j 5))"));
    let box_only = ch(&[vec![0, 0], vec![1, 1], vec![2, 4]]);
    assert!(box_only.equalities.is_empty());
    assert_eq!(box_only.to_term(&[i, j]), p("(and (<= 0 i) (<= i 2) (<= 0 j) (<= j 4))"));
}

#[test]
fn qgen_accepts_valid_candidate() {
    let Some(mut s) = z3() else { return };
    // A says the whole prefix [0, sz) holds 42
    let a = p("(and (= sz! 1) (= (select A! 0) 42))");
    let l = clause("(=> (< 0 sz) (= (select A 0) 42))");
    let g = qgen(&mut s, QGenMode::Simple, &l, &Substitution::new(), &a, &QGenOptions::default()).unwrap().expect("generalized");
    assert_eq!(g.kind, CandidateKind::Simple);
    assert!(!g.core.is_empty());
    assert!(g.body.free_vars().len() == 1);
}

#[test]
fn qgen_rejects_invalid_candidate() {
    let Some(mut s) = z3() else { return };
    // only position 0 is known to hold 42 while sz may be large
    let a = p("(and (= (select A! 0) 42) (< 0 sz!))");
    let l = clause("(=> (< 0 sz) (= (select A 0) 42))");
    assert!(qgen(&mut s, QGenMode::Both, &l, &Substitution::new(), &a, &QGenOptions::default()).unwrap().is_none());
}

#[test]
fn no_select_means_no_candidate() {
    let Some(mut s) = z3() else { return };
    let l = clause("(=> (< 0 sz) (= x 42))");
    assert!(qgen(&mut s, QGenMode::Both, &l, &Substitution::new(), &p("(= x! 42)"), &QGenOptions::default()).unwrap().is_none());
}

proptest! {
    #[test]
    fn hull_contains_points(pts in prop::collection::vec(prop::collection::vec(-20i64..20, 2), 1..6)) {
        let h = ch(&pts);
        for q in &pts {
            prop_assert!(h.contains(q));
        }
    }

    #[test]
    fn hull_box_is_tight(pts in prop::collection::vec(prop::collection::vec(-20i64..20, 3), 1..6)) {
        let h = ch(&pts);
        for (k, lo, hi) in &h.bounds {
            prop_assert!(pts.iter().any(|q| q[*k] == *lo));
            prop_assert!(pts.iter().any(|q| q[*k] == *hi));
        }
    }

    #[test]
    fn hull_equalities_are_the_affine_hull(pts in prop::collection::vec(prop::collection::vec(-9i64..9, 2), 1..5)) {
        // the number of equalities is d minus the dimension of the affine span
        let h = ch(&pts);
        let d = 2usize;
        let diffs: Vec<(i64, i64)> = pts.iter().map(|q| (q[0] - pts[0][0], q[1] - pts[0][1])).collect();
        let rank = if diffs.iter().all(|v| *v == (0, 0)) {
            0
        } else if diffs.iter().all(|a| diffs.iter().all(|b| a.0 * b.1 == a.1 * b.0)) {
            1
        } else {
            2
        };
        prop_assert_eq!(h.equalities.len(), d - rank);
    }

    #[test]
    fn arith_candidates_restore_the_lemma(a in 0i64..5, b in -50i64..50, c in 0i64..5, d in -50i64..50) {
        prop_assume!(a != c || b != d);
        let l = Clause::new([
            Term::ne(&Term::select(&p("A"), &Term::int(a)), &Term::int(b)),
            Term::eq(&Term::select(&p("A"), &Term::int(c)), &Term::int(d)),
        ]);
        for cand in arith_candidates(&l, &BTreeSet::new()) {
            prop_assert!(well_formed(&l, &Substitution::new(), &cand));
        }
    }
}
