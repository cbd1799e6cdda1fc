//! Linear constrained Horn clauses over a single predicate, as produced by
//! verification front ends in SMT-LIB `HORN` logic, turned into a safety
//! problem.
//!
//! The predicate's arguments become state variables `s0 .. s{n-1}`. Each
//! clause `k` may mention local variables; those not identified with a
//! predicate argument become extra state variables `c{k}_x` that only that
//! clause constrains (other steps leave them unconstrained). Facts form
//! `init`, rules form `trans` and queries form `bad`.

use std::collections::{BTreeMap, HashMap, HashSet};

use super::{valid_name, ProblemError, SafetyProblem, StateVar};
use crate::term::sexp::{parse_all, Pos, Sexp};
use crate::term::{parse_sort, parse_term, ParseError, Sort, Term, UConst};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ChcError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{0}: {1}")]
    Unsupported(Pos, String),
    #[error("no predicate declared")]
    NoPredicate,
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

fn unsupported<T>(s: &Sexp, msg: impl Into<String>) -> Result<T, ChcError> {
    Err(ChcError::Unsupported(s.pos(), msg.into()))
}

struct Pred {
    name: String,
    sorts: Vec<Sort>,
}

/// One clause split into its parts, still as S-expressions.
struct RawClause<'a> {
    locals: Vec<(String, Sort)>,
    body_app: Option<&'a [Sexp]>,
    constraints: Vec<&'a Sexp>,
    /// `None` for a query (head `false`).
    head_app: Option<&'a [Sexp]>,
}

fn conjuncts<'a>(s: &'a Sexp, out: &mut Vec<&'a Sexp>) {
    match s.list() {
        Some([h, rest @ ..]) if h.atom() == Some("and") => rest.iter().for_each(|c| conjuncts(c, out)),
        _ => out.push(s),
    }
}

fn pred_app<'a>(s: &'a Sexp, pred: &Pred) -> Option<&'a [Sexp]> {
    if s.atom() == Some(pred.name.as_str()) {
        return Some(&[]);
    }
    match s.list() {
        Some([h, args @ ..]) if h.atom() == Some(pred.name.as_str()) => Some(args),
        _ => None,
    }
}

fn split_clause<'a>(s: &'a Sexp, pred: &Pred) -> Result<RawClause<'a>, ChcError> {
    let mut locals = Vec::new();
    let mut e = s;
    if let Some([h, binders, body]) = e.list() {
        if h.atom() == Some("forall") {
            for b in binders.list().unwrap_or_default() {
                let Some([n, sort]) = b.list() else { return unsupported(b, "malformed binder") };
                let Some(n) = n.atom() else { return unsupported(b, "malformed binder") };
                locals.push((n.to_string(), parse_sort(sort)?));
            }
            e = body;
        }
    }
    let (body, head): (Option<&Sexp>, Option<&Sexp>) = match e.list() {
        Some([h, b, hd]) if h.atom() == Some("=>") => (Some(b), Some(hd)),
        Some([h, b]) if h.atom() == Some("not") => (Some(b), None),
        _ => (None, Some(e)),
    };
    let head_app = match head {
        None => None,
        Some(h) if h.atom() == Some("false") => None,
        Some(h) => match pred_app(h, pred) {
            Some(args) => Some(args),
            None => return unsupported(h, "clause head must be the predicate or false"),
        },
    };
    let mut parts = Vec::new();
    if let Some(b) = body {
        conjuncts(b, &mut parts);
    }
    let mut body_app = None;
    let mut constraints = Vec::new();
    for p in parts {
        match pred_app(p, pred) {
            Some(_) if body_app.is_some() => {
                return unsupported(p, "nonlinear clause (more than one predicate in the body)");
            }
            Some(args) => body_app = Some(args),
            None => constraints.push(p),
        }
    }
    Ok(RawClause { locals, body_app, constraints, head_app })
}

fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect()
}

/// Translate a set of linear Horn clauses to a safety problem.
pub fn chc_to_problem(src: &str) -> Result<SafetyProblem, ChcError> {
    let items = parse_all(src).map_err(ParseError::from)?;
    let mut pred: Option<Pred> = None;
    let mut asserts = Vec::new();
    for item in &items {
        match item.head() {
            Some("declare-fun") | Some("declare-rel") => {
                let list = item.list().unwrap_or_default();
                let (name, args, ret) = match list {
                    [_, n, a, r] => (n, a, Some(r)),
                    [_, n, a] => (n, a, None),
                    _ => return unsupported(item, "malformed declaration"),
                };
                if let Some(r) = ret {
                    if r.atom() != Some("Bool") {
                        return unsupported(item, "only Boolean predicates can be declared");
                    }
                }
                if pred.is_some() {
                    return unsupported(item, "only a single predicate is supported");
                }
                let Some(name) = name.atom() else { return unsupported(name, "malformed name") };
                let sorts = args.list().unwrap_or_default().iter().map(parse_sort).collect::<Result<_, _>>()?;
                pred = Some(Pred { name: name.to_string(), sorts });
            }
            Some("assert") => match item.list() {
                Some([_, body]) => asserts.push(body),
                _ => return unsupported(item, "malformed assert"),
            },
            Some("set-logic" | "set-info" | "set-option" | "check-sat" | "exit" | "get-model" | "get-info") => {}
            _ => return unsupported(item, format!("unsupported command {item}")),
        }
    }
    let pred = pred.ok_or(ChcError::NoPredicate)?;
    let mut vars: Vec<StateVar> =
        pred.sorts.iter().enumerate().map(|(i, s)| StateVar { name: format!("s{i}"), sort: *s }).collect();
    let mut used: HashSet<String> = vars.iter().map(|v| v.name.clone()).collect();
    let state = |i: usize| Term::cnst(&UConst::state(&format!("s{i}"), pred.sorts[i]));
    let primed = |i: usize| Term::cnst(&UConst::primed(&format!("s{i}"), pred.sorts[i]));

    let (mut init, mut trans, mut bad) = (Vec::new(), Vec::new(), Vec::new());
    for (k, a) in asserts.iter().enumerate() {
        let c = split_clause(a, &pred)?;
        for args in c.body_app.iter().chain(c.head_app.iter()) {
            if args.len() != pred.sorts.len() {
                return unsupported(a, format!("{} expects {} arguments", pred.name, pred.sorts.len()));
            }
        }
        let is_rule = c.body_app.is_some() && c.head_app.is_some();
        // locals identified with a body argument become that argument
        let mut env: HashMap<String, Term> = HashMap::new();
        let mut eqs = Vec::new();
        let sorts: BTreeMap<&str, Sort> = c.locals.iter().map(|(n, s)| (n.as_str(), *s)).collect();
        let mut pending = Vec::new();
        if let Some(args) = c.body_app {
            for (i, arg) in args.iter().enumerate() {
                match arg.atom().filter(|n| sorts.get(n) == Some(&pred.sorts[i]) && !env.contains_key(*n)) {
                    Some(n) => {
                        env.insert(n.to_string(), state(i));
                    }
                    None => pending.push((i, arg)),
                }
            }
        }
        for (n, sort) in &c.locals {
            if env.contains_key(n) {
                continue;
            }
            let mut name = format!("c{k}_{}", sanitize(n));
            while used.contains(&name) || !valid_name(&name) {
                name.push('_');
            }
            used.insert(name.clone());
            vars.push(StateVar { name: name.clone(), sort: *sort });
            let cnst = if is_rule { UConst::primed(&name, *sort) } else { UConst::state(&name, *sort) };
            env.insert(n.clone(), Term::cnst(&cnst));
        }
        let resolve = |s: &str| env.get(s).cloned();
        let arg_eq = |lhs: Term, arg: &Sexp| -> Result<Term, ChcError> {
            let t = parse_term(arg, &resolve)?;
            if t.sort() != lhs.sort() {
                return unsupported(arg, "argument sort mismatch");
            }
            Ok(Term::eq(&lhs, &t))
        };
        for (i, arg) in pending {
            eqs.push(arg_eq(state(i), arg)?);
        }
        for con in &c.constraints {
            let t = parse_term(con, &resolve)?;
            if t.sort() != Sort::Bool {
                return unsupported(con, "constraint is not Boolean");
            }
            eqs.push(t);
        }
        match (c.body_app.is_some(), c.head_app) {
            (_, Some(head)) => {
                for (i, arg) in head.iter().enumerate() {
                    let lhs = if is_rule { primed(i) } else { state(i) };
                    eqs.push(arg_eq(lhs, arg)?);
                }
                if is_rule { trans.push(Term::and(eqs)) } else { init.push(Term::and(eqs)) }
            }
            (_, None) => bad.push(Term::and(eqs)),
        }
    }
    Ok(SafetyProblem::new(vars, Term::or(init), Term::or(trans), Term::or(bad))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const COUNTER: &str = "
        (set-logic HORN)
        (declare-fun inv (Int Int) Bool)
        (assert (forall ((x Int) (n Int)) (=> (and (= x 0) (> n 0)) (inv x n))))
        (assert (forall ((x Int) (n Int) (y Int)) (=> (and (inv x n) (< x n) (= y (+ x 1))) (inv y n))))
        (assert (forall ((x Int) (n Int)) (=> (and (inv x n) (> x n)) false)))
        (check-sat)";

    #[test]
    fn counter_translates() {
        let p = chc_to_problem(COUNTER).unwrap();
        let names: Vec<&str> = p.vars.iter().map(|v| v.name.as_str()).collect();
        // the fact's locals and the rule's fresh `y` become clause-local state
        assert_eq!(names, ["s0", "s1", "c0_x", "c0_n", "c1_y"]);
        let text = p.to_text();
        assert!(text.contains("(bad (< s1 s0))"), "{text}");
        assert!(SafetyProblem::parse(&text).is_ok());
    }

    #[test]
    fn rejects_nonlinear() {
        let src = "(declare-fun p (Int) Bool)
                   (assert (forall ((x Int) (y Int)) (=> (and (p x) (p y)) (p (+ x y)))))";
        assert!(matches!(chc_to_problem(src), Err(ChcError::Unsupported(..))));
    }

    #[test]
    fn rejects_two_predicates() {
        let src = "(declare-fun p (Int) Bool) (declare-fun q (Int) Bool)";
        assert!(matches!(chc_to_problem(src), Err(ChcError::Unsupported(..))));
    }

    #[test]
    fn repeated_body_argument_becomes_equality() {
        let src = "(declare-fun p (Int Int) Bool)
                   (assert (forall ((x Int)) (=> (= x 1) (p x x))))
                   (assert (forall ((x Int)) (=> (p x x) (p (+ x 1) x))))
                   (assert (forall ((x Int)) (not (and (p x 3) (= x 5)))))";
        let p = chc_to_problem(src).unwrap();
        assert!(p.trans.to_string().contains("(= s1 s0)") || p.trans.to_string().contains("(= s0 s1)"), "{}", p.trans);
    }
}
