//! Partial interpolation for a formula `A` and a ground cube `B`.
//!
//! The result is a clause `phi` with `A => forall U. phi` and `phi => !B`,
//! where `U` are the constants of `B` that `phi` keeps although they do not
//! occur in `A`. Starting from the trivial interpolant `!B`, literals not in
//! an unsatisfiable core are dropped.

use std::collections::BTreeSet;

use log::trace;

use crate::smt::{Model, SatResult, SmtError, Solver};
use crate::term::{Clause, Cube, LinExpr, Op, Term, UConst};

#[derive(Debug, thiserror::Error)]
pub enum ItpError {
    #[error("A and B are jointly satisfiable")]
    Satisfiable(Model),
    #[error("solver returned unknown: {0}")]
    Unknown(String),
    #[error(transparent)]
    Smt(#[from] SmtError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interpolant {
    pub clause: Clause,
    /// Constants of the clause that occur in `B` but not in `A`.
    pub extra: BTreeSet<UConst>,
    /// True when no literal could be dropped, i.e. the clause is `!B`.
    pub trivial: bool,
}

/// The trivial interpolant `(!B, Const(B) \ Const(A))`.
pub fn trivial(a: &Term, b: &Cube) -> Interpolant {
    let ca = a.consts();
    Interpolant { clause: b.negate(), extra: b.consts().difference(&ca).cloned().collect(), trivial: true }
}

fn labelled(a: &Term, lits: &[Term]) -> Vec<(String, Term)> {
    let mut out = vec![("A".to_string(), a.clone())];
    out.extend(lits.iter().enumerate().map(|(k, l)| (format!("b{k}"), l.clone())));
    out
}

fn core_subset(lits: &[Term], core: &[String]) -> Vec<Term> {
    lits.iter().enumerate().filter(|(k, _)| core.iter().any(|c| *c == format!("b{k}"))).map(|(_, l)| l.clone()).collect()
}

pub fn pitp(solver: &mut dyn Solver, a: &Term, b: &Cube) -> Result<Interpolant, ItpError> {
    match solver.check(&labelled(a, b.literals()))? {
        SatResult::Sat(m) => Err(ItpError::Satisfiable(m)),
        SatResult::Unknown(r) => Err(ItpError::Unknown(r)),
        SatResult::Unsat(core) => {
            let kept = Cube::new(core_subset(b.literals(), &core));
            let ca = a.consts();
            let clause = kept.negate();
            let extra = clause.consts().intersection(&b.consts()).filter(|c| !ca.contains(c)).cloned().collect();
            let trivial = kept.len() == b.len();
            trace!("pitp: kept {}/{} literals", kept.len(), b.len());
            Ok(Interpolant { clause, extra, trivial })
        }
    }
}

/// Greedily drop literals of `clause` (one pass per `passes`, in term order)
/// while `A => clause` stays valid. Unknown answers keep the literal.
pub fn generalize_lemma(solver: &mut dyn Solver, clause: &Clause, a: &Term, passes: usize) -> Result<Clause, SmtError> {
    generalize_lemma_with(solver, clause, &|_| a.clone(), passes)
}

/// As [`generalize_lemma`], with a premise that may depend on the candidate
/// literals. The premise must be antitone: fewer literals give a stronger
/// premise (as with relative induction, where the candidate is assumed).
pub fn generalize_lemma_with(solver: &mut dyn Solver, clause: &Clause, premise: &dyn Fn(&[Term]) -> Term, passes: usize) -> Result<Clause, SmtError> {
    let mut lits: Vec<Term> = clause.literals().to_vec();
    for _ in 0..passes {
        let mut changed = false;
        for l in clause.literals() {
            let Some(pos) = lits.iter().position(|x| x == l) else { continue };
            let mut cand = lits.clone();
            cand.remove(pos);
            let negs: Vec<Term> = cand.iter().map(Term::not).collect();
            if let SatResult::Unsat(core) = solver.check(&labelled(&premise(&cand), &negs))? {
                let needed = core_subset(&negs, &core);
                lits = cand.into_iter().filter(|x| needed.contains(&Term::not(x))).collect();
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(Clause::new(lits))
}

/// A literal read as a bound `s <= k` (`upper`) or `s >= k` on a
/// non-constant linear term `s`.
#[derive(Clone, Debug)]
struct Bound {
    s: LinExpr,
    k: i64,
    upper: bool,
}

impl Bound {
    fn to_term(&self, k: i64) -> Term {
        let (s, k) = (self.s.to_term(), Term::int(k));
        if self.upper {
            Term::le(&s, &k)
        } else {
            Term::le(&k, &s)
        }
    }
}

fn has_select(t: &Term) -> bool {
    let mut found = false;
    t.visit(&mut |s| found |= s.op() == Some(Op::Select));
    found
}

/// Bound readings of a literal, each at least as strong as the literal.
fn bounds_of(l: &Term) -> Vec<Bound> {
    let (neg, atom) = match l.op() {
        Some(Op::Not) => (true, &l.args()[0]),
        _ => (false, l),
    };
    let Some(op @ (Op::Le | Op::Lt | Op::Eq)) = atom.op() else { return Vec::new() };
    if has_select(atom) || atom.args()[0].sort() != crate::term::Sort::Int {
        return Vec::new();
    }
    let e = LinExpr::from_term(&atom.args()[0]).sub(&LinExpr::from_term(&atom.args()[1]));
    let c = e.get_constant();
    let s = e.add_constant(-c);
    if s.is_constant() {
        return Vec::new();
    }
    // the literal says something about s relative to -c
    let b = |k: Option<i64>, upper| k.map(|k| Bound { s: s.clone(), k, upper });
    let m = c.checked_neg();
    let pm = |d: i64| m.and_then(|m| m.checked_add(d));
    match (op, neg) {
        (Op::Le, false) => b(m, true).into_iter().collect(),
        (Op::Lt, false) => b(pm(-1), true).into_iter().collect(),
        (Op::Le, true) => b(pm(1), false).into_iter().collect(),
        (Op::Lt, true) => b(m, false).into_iter().collect(),
        (Op::Eq, true) => b(pm(-1), true).into_iter().chain(b(pm(1), false)).collect(),
        _ => Vec::new(),
    }
}

/// Replace bound literals of `clause` (including disequalities) by the
/// strongest bound over the constants `consts` that keeps `A => clause`
/// valid. Only bounds strictly stronger than the literal (for a
/// disequality: than either of its halves) are considered, so literals that
/// cannot be tightened stay as they are. The result implies the input clause.
pub fn strengthen_bounds(solver: &mut dyn Solver, clause: &Clause, a: &Term, consts: &BTreeSet<i64>) -> Result<Clause, SmtError> {
    strengthen_bounds_with(solver, clause, &|_| a.clone(), consts)
}

/// As [`strengthen_bounds`] with a candidate-dependent premise. Validity
/// need not be monotone in the bound then; the search still only accepts
/// bounds it has checked.
pub fn strengthen_bounds_with(solver: &mut dyn Solver, clause: &Clause, premise: &dyn Fn(&[Term]) -> Term, consts: &BTreeSet<i64>) -> Result<Clause, SmtError> {
    let mut lits: Vec<Term> = clause.literals().to_vec();
    let valid = |solver: &mut dyn Solver, lits: &[Term]| -> Result<bool, SmtError> {
        let negs: Vec<Term> = lits.iter().map(Term::not).collect();
        Ok(solver.check(&labelled(&premise(lits), &negs))?.is_unsat())
    };
    for p in 0..lits.len() {
        for bound in bounds_of(&lits[p]) {
            // candidate values strictly stronger than the literal, strongest first
            let mut ks: Vec<i64> = consts.iter().copied().filter(|&k| if bound.upper { k < bound.k } else { k > bound.k }).collect();
            if !bound.upper {
                ks.reverse();
            }
            // validity is monotone along ks for a fixed premise: search for
            // the first valid one, remembering only checked successes
            let (mut lo, mut hi, mut best) = (0usize, ks.len(), None);
            while lo < hi {
                let mid = (lo + hi) / 2;
                let mut cand = lits.clone();
                cand[p] = bound.to_term(ks[mid]);
                if valid(solver, &cand)? {
                    best = Some(cand);
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            if let Some(cand) = best {
                lits = cand;
                break;
            }
        }
    }
    Ok(Clause::new(lits))
}

/// Integer literals of `t`, plus 0.
pub fn constants_of(t: &Term) -> BTreeSet<i64> {
    let mut out = BTreeSet::from([0]);
    t.visit(&mut |s| {
        if let Some(k) = s.as_int() {
            out.insert(k);
            if let Some(n) = k.checked_neg() {
                out.insert(n);
            }
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smt::{find_solver, ExternalSolver};
    use crate::term::parse_term;
    use crate::term::sexp::parse_one;
    use crate::term::Sort;
    use std::time::Duration;

    fn p(src: &str) -> Term {
        parse_term(&parse_one(src).unwrap(), &|s| Some(Term::cnst(&UConst::state(s, Sort::Int)))).unwrap()
    }

    fn z3() -> Option<ExternalSolver> {
        find_solver().ok().and_then(|path| ExternalSolver::new(path, Duration::from_secs(10)).ok())
    }

    #[test]
    fn core_drops_irrelevant_literals() {
        let Some(mut s) = z3() else { return };
        let a = p("(and (>= x 0) (= y (+ x 1)))");
        let b = Cube::new([p("(< y 0)"), p("(= z 3)")]);
        let r = pitp(&mut s, &a, &b).unwrap();
        assert_eq!(r.clause.to_term(), p("(<= 0 y)"));
        assert!(r.extra.is_empty());
        assert!(!r.trivial);
    }

    #[test]
    fn trivial_result_when_every_literal_is_needed() {
        let Some(mut s) = z3() else { return };
        let a = p("(= x y)");
        let b = Cube::new([p("(< x z)"), p("(< z y)")]);
        let r = pitp(&mut s, &a, &b).unwrap();
        assert!(r.trivial);
        assert_eq!(r, trivial(&a, &b));
        assert_eq!(r.extra, [UConst::state("z", Sort::Int)].into_iter().collect());
    }

    #[test]
    fn satisfiable_pairs_are_reported() {
        let Some(mut s) = z3() else { return };
        let r = pitp(&mut s, &p("(< x 3)"), &Cube::new([p("(> x 0)")]));
        assert!(matches!(r, Err(ItpError::Satisfiable(_))));
    }

    #[test]
    fn bounds_are_strengthened_to_known_constants() {
        let Some(mut s) = z3() else { return };
        let a = p("(and (<= 0 x) (<= x 10))");
        let clause = Clause::new([p("(not (= x (- 2)))")]);
        let consts = constants_of(&a);
        let g = strengthen_bounds(&mut s, &clause, &a, &consts).unwrap();
        assert_eq!(g.to_term(), p("(<= 0 x)"));
        // an upper bound tightens to 10, not beyond
        let g = strengthen_bounds(&mut s, &Clause::new([p("(< x 12)")]), &a, &consts).unwrap();
        assert_eq!(g.to_term(), p("(<= x 10)"));
        // nothing stronger holds: the literal is kept in bound form
        let g = strengthen_bounds(&mut s, &Clause::new([p("(< x 11)"), p("(= y 1)")]), &a, &consts).unwrap();
        assert_eq!(g.to_term(), p("(or (<= x 10) (= y 1))"));
    }

    #[test]
    fn generalization_drops_unneeded_literals() {
        let Some(mut s) = z3() else { return };
        let a = p("(and (<= 0 x) (<= x 10))");
        let clause = Clause::new([p("(<= 0 x)"), p("(= y 2)"), p("(< z 5)")]);
        let g = generalize_lemma(&mut s, &clause, &a, 1).unwrap();
        assert_eq!(g.to_term(), p("(<= 0 x)"));
    }
}
