//! Property tests over randomly generated terms, substitutions, models and
//! small transition systems.

mod common;

use std::collections::BTreeSet;
use std::time::Duration;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

use quic3::engine::{solve, Config, Verdict};
use quic3::frontend::config::RunConfig;
use quic3::frontend::SafetyProblem;
use quic3::itp::pitp;
use quic3::mbp::pmbp;
use quic3::oracle::{bmc, BmcResult};
use quic3::qgen::ch;
use quic3::smt::{check_terms, ArrayValue, Model, SatResult, Value};
use quic3::term::{Clause, Cube, Op, Sort, Substitution, Term, UConst};

use common::*;

fn int_const(name: &'static str) -> Term {
    Term::cnst(&UConst::state(name, Sort::Int))
}

fn array() -> Term {
    Term::cnst(&UConst::state("A", Sort::Array))
}

/// Int terms over `x`, `y`, the array `A` and (optionally) variables `v!0..3`.
fn int_term(vars: bool) -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        prop_oneof![Just("x"), Just("y")].prop_map(int_const),
        (-3i64..=3).prop_map(Term::int),
        (0u32..3).prop_map(move |v| if vars { Term::var(v) } else { Term::int(v as i64) }),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::add([a, b])),
            (-2i64..=3, inner.clone()).prop_map(|(c, a)| Term::mul(c, &a)),
            inner.clone().prop_map(|i| Term::select(&array(), &i)),
            (inner.clone(), inner.clone(), inner).prop_map(|(i, v, j)| Term::select(&Term::store(&array(), &i, &v), &j)),
        ]
    })
}

fn literal(vars: bool) -> impl Strategy<Value = Term> {
    (int_term(vars), int_term(vars), 0..4u8, any::<bool>()).prop_map(|(a, b, r, neg)| {
        let atom = match r {
            0 => Term::le(&a, &b),
            1 => Term::lt(&a, &b),
            _ => Term::eq(&a, &b),
        };
        if neg {
            Term::not(&atom)
        } else {
            atom
        }
    })
}

fn formula() -> impl Strategy<Value = Term> {
    literal(false).prop_recursive(2, 8, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..3).prop_map(Term::and),
            prop::collection::vec(inner.clone(), 1..3).prop_map(Term::or),
            inner.prop_map(|t| Term::not(&t)),
        ]
    })
}

fn model() -> impl Strategy<Value = Model> {
    (-4i64..=4, -4i64..=4, -2i64..=2, prop::collection::btree_map(-3i64..=3, -3i64..=3, 0..4)).prop_map(|(x, y, d, entries)| {
        let mut m = Model::new();
        m.set(UConst::state("x", Sort::Int), Value::Int(x));
        m.set(UConst::state("y", Sort::Int), Value::Int(y));
        let a = entries.into_iter().fold(ArrayValue::constant(d), |a, (i, v)| a.store(i, v));
        m.set(UConst::state("A", Sort::Array), Value::Array(a));
        m
    })
}

fn ground_subst(dom: impl Strategy<Value = BTreeSet<u32>>) -> impl Strategy<Value = Substitution> {
    dom.prop_flat_map(|d| {
        let n = d.len();
        (Just(d), prop::collection::vec(int_term(false), n))
            .prop_map(|(d, ts)| d.into_iter().zip(ts).collect::<Substitution>())
    })
}

fn linear(t: &Term) -> bool {
    let mut ok = true;
    t.visit(&mut |s| {
        if s.op() == Some(Op::Mul) {
            ok &= s.args().iter().filter(|a| a.as_int().is_none()).count() <= 1;
        }
    });
    ok
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn terms_are_well_sorted_and_linear(t in int_term(true), l in literal(true)) {
        prop_assert_eq!(t.sort(), Sort::Int);
        prop_assert_eq!(l.sort(), Sort::Bool);
        prop_assert!(linear(&t) && linear(&l));
        prop_assert_eq!(t.is_ground(), t.free_vars().is_empty());
    }

    #[test]
    fn total_substitution_grounds(t in literal(true), s in ground_subst(Just((0..3).collect()))) {
        let r = s.apply(&t);
        prop_assert!(r.is_ground());
        prop_assert_eq!(r.sort(), Sort::Bool);
    }

    #[test]
    fn substitution_outside_domain_is_identity(t in literal(false), s in ground_subst(prop::collection::btree_set(0u32..3, 0..3))) {
        prop_assert_eq!(s.apply(&t), t);
    }

    #[test]
    fn union_prefers_left(
        a in ground_subst(prop::collection::btree_set(0u32..5, 0..4)),
        b in ground_subst(prop::collection::btree_set(0u32..5, 0..4)),
    ) {
        let u = a.union(&b);
        prop_assert_eq!(u.domain(), a.domain().union(&b.domain()).copied().collect::<BTreeSet<_>>());
        for v in 0..5 {
            prop_assert_eq!(u.get(v), a.get(v).or(b.get(v)));
        }
    }

    #[test]
    fn disjoint_union_is_sequential_application(t in literal(true), a in ground_subst(prop::collection::btree_set(0u32..3, 0..3)), b in ground_subst(Just((0..3).collect()))) {
        let b = b.restrict(&(0..3).filter(|v| !a.domain().contains(v)).collect());
        prop_assert_eq!(a.union(&b).apply(&t), b.apply(&a.apply(&t)));
    }

    #[test]
    fn cube_clause_duality(lits in prop::collection::vec(literal(false), 1..4), m in model()) {
        let cube = Cube::new(lits.clone());
        let clause = cube.negate();
        prop_assert_eq!(clause.negate(), cube.clone());
        prop_assert_eq!(m.satisfies(&cube.to_term()), !m.satisfies(&clause.to_term()));
        let c = Clause::new(lits);
        prop_assert_eq!(c.literals().iter().all(|l| l.is_ground()), c.free_vars().is_empty());
    }

    #[test]
    fn hull_contains_points_and_is_stable(pts in prop::collection::vec(prop::collection::vec(-9i64..9, 2), 1..5)) {
        let h = ch(&pts);
        let (i, j) = (int_const("x"), int_const("y"));
        let hull = h.to_term(&[i.clone(), j.clone()]);
        for p in &pts {
            let mut m = Model::new();
            m.set(UConst::state("x", Sort::Int), Value::Int(p[0]));
            m.set(UConst::state("y", Sort::Int), Value::Int(p[1]));
            prop_assert!(m.satisfies(&hull));
        }
        let mut twice = pts.clone();
        twice.extend(pts.iter().rev().cloned());
        prop_assert_eq!(ch(&twice), h);
    }

    #[test]
    fn run_config_rejects_zero_bounds(depth in 0usize..3, inst in 0usize..3, timeout in 0u64..3) {
        let cfg = RunConfig {
            max_depth: depth,
            max_instances: inst,
            query_timeout: Duration::from_secs(timeout),
            ..RunConfig::default()
        };
        prop_assert_eq!(cfg.validate().is_ok(), depth > 0 && inst > 0 && timeout > 0);
    }

    #[test]
    fn projection_shape(seed in any::<u64>(), arrays in any::<bool>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (u, phi) = gen_mbp(&mut rng, arrays);
        let (bound, _) = if arrays { array_bound() } else { int_bound() };
        if let Some(m) = model_of(&mut rng, &phi, &bound) {
            let r = pmbp(&u, &phi, &m).expect("projection");
            for c in &r.kept {
                prop_assert!(u.contains(c) || c.name().starts_with(quic3::mbp::WITNESS_PREFIX));
                prop_assert!(c.sort() != Sort::Array);
            }
            let gone: BTreeSet<&UConst> = u.iter().filter(|c| !r.kept.contains(c)).collect();
            prop_assert!(r.cube.consts().iter().all(|c| !gone.contains(c)));
            prop_assert!(r.cube.consts().iter().all(|c| phi.consts().contains(c) || r.kept.contains(c)));
            prop_assert!(r.model(&m).satisfies(&r.cube.to_term()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// `M |= phi` agrees with the external solver on `phi /\ M`.
    #[test]
    fn evaluation_agrees_with_solver(phi in formula(), m in model()) {
        let Some(mut z3) = solver() else { return Ok(()) };
        let mut q = vec![phi.clone()];
        for (c, v) in m.iter() {
            match v {
                Value::Int(n) => q.push(Term::eq(&Term::cnst(c), &Term::int(*n))),
                Value::Array(a) => {
                    // the array is fixed on every index the formula can read
                    for k in -12..=12 {
                        q.push(Term::eq(&Term::select(&Term::cnst(c), &Term::int(k)), &Term::int(a.get(k))));
                    }
                }
                Value::Bool(_) => unreachable!(),
            }
        }
        let reads_in_range = {
            let mut ok = true;
            phi.visit(&mut |s| if s.op() == Some(Op::Select) {
                ok &= m.eval_int(&s.args()[1]).is_ok_and(|i| (-12..=12).contains(&i));
            });
            ok
        };
        prop_assume!(reads_in_range);
        match check_terms(&mut z3, &q).expect("query") {
            SatResult::Sat(_) => prop_assert!(m.satisfies(&phi)),
            SatResult::Unsat(_) => prop_assert!(!m.satisfies(&phi)),
            SatResult::Unknown(e) => panic!("unknown: {e}"),
        }
    }

    #[test]
    fn interpolant_constants(seed in any::<u64>()) {
        let Some(mut z3) = solver() else { return Ok(()) };
        let mut rng = StdRng::seed_from_u64(seed);
        let (a, b) = gen_itp(&mut rng);
        let mut q = vec![a.clone()];
        q.extend(b.literals().iter().cloned());
        prop_assume!(check_terms(&mut z3, &q).expect("query").is_unsat());
        let r = pitp(&mut z3, &a, &b).expect("interpolant");
        let (ca, cb) = (a.consts(), b.consts());
        prop_assert!(r.extra.iter().all(|c| cb.contains(c) && !ca.contains(c)));
        prop_assert!(r.clause.consts().iter().all(|c| (ca.contains(c) && cb.contains(c)) || r.extra.contains(c)));
        prop_assert!(r.clause.literals().iter().all(|l| l.is_ground()));
    }
}

/// `x` starts at `start`, moves by `step` (or by `alt` when `x >= pivot`),
/// and is bad at `target`. A ghost array records visited positions.
fn counter(start: i64, step: i64, alt: i64, pivot: i64, target: i64) -> SafetyProblem {
    let src = format!(
        "(declare-state x Int)
         (declare-state A (Array Int Int))
         (init (and (= x {start}) (= (select A 0) 0)))
         (trans (and (= x! (ite (< x {pivot}) (+ x {step}) (+ x {alt}))) (= A! (store A x 1))))
         (bad (and (= x {target}) (= (select A 0) 0)))"
    );
    SafetyProblem::parse(&src).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// The engine agrees with bounded model checking, keeps its frames
    /// monotone, learns ground lemma instances, and its traces replay.
    #[test]
    fn engine_agrees_with_bmc(start in -2i64..=2, step in -1i64..=2, alt in -2i64..=1, pivot in 0i64..=3, target in -3i64..=5) {
        let Some(mut z3) = solver() else { return Ok(()) };
        let p = counter(start, step, alt, pivot, target);
        let out = solve(&p, &Config { max_depth: 10, ..Config::default() }, &mut z3).expect("engine");
        prop_assert!(out.audit.clean(), "{:?}", out.audit);
        for w in out.frames.windows(2).skip(1) {
            prop_assert!(w[1].is_subset(&w[0]));
        }
        prop_assert!(out.lemmas.iter().all(|l| l.instance().is_ground()));
        let oracle = bmc(&mut z3, &p, 10).expect("bmc");
        if let BmcResult::CexAt(k, trace) = &oracle.result {
            prop_assert!(replay(&p, trace));
            prop_assert_eq!(trace.len(), k + 1);
        }
        match (&out.verdict, oracle.cex_length()) {
            (Verdict::Cex { trace, length }, Some(k)) => {
                prop_assert_eq!(*length, k);
                prop_assert!(replay(&p, trace));
            }
            (Verdict::Safe { .. }, None) => {}
            (Verdict::ResourceLimit { .. }, None) => {}
            (v, k) => prop_assert!(false, "engine {} vs bmc {:?}", v.name(), k),
        }
    }
}
