//! Time-indexed copies of a transition system, for bounded queries and
//! counterexample traces.

use crate::frontend::SafetyProblem;
use crate::smt::{ArrayValue, Model, SatResult, SmtError, Solver, Value};
use crate::term::{rewrite, ConstKind, Sort, Term, TermKind, UConst};

/// Copy of state variable `name` at step `t`.
pub fn step_const(name: &str, sort: Sort, t: usize) -> UConst {
    UConst::aux(&format!("{name}@{t}"), sort)
}

/// State constants at step `t`, primed ones at step `t + 1`.
pub fn at_step(term: &Term, t: usize) -> Term {
    rewrite(term, &mut |s| match s.kind() {
        TermKind::Const(c) if c.kind() == ConstKind::State => Some(Term::cnst(&step_const(c.name(), c.sort(), t))),
        TermKind::Const(c) if c.kind() == ConstKind::Primed => Some(Term::cnst(&step_const(c.name(), c.sort(), t + 1))),
        _ => None,
    })
}

/// `Init@0 /\ Tr@0 /\ ... /\ Tr@(k-1) /\ target@k`.
pub fn unrolling(p: &SafetyProblem, k: usize, target: &Term) -> Vec<(String, Term)> {
    let mut q = vec![("init".to_string(), at_step(&p.init, 0))];
    for t in 0..k {
        q.push((format!("tr{t}"), at_step(&p.trans, t)));
    }
    q.push(("target".to_string(), at_step(target, k)));
    q
}

fn default_value(sort: Sort) -> Value {
    match sort {
        Sort::Bool => Value::Bool(false),
        Sort::Int => Value::Int(0),
        Sort::Array => Value::Array(ArrayValue::constant(0)),
    }
}

/// Split a model of an unrolling into `k + 1` states over the state
/// constants. Unconstrained variables get a default value.
pub fn trace_from_model(p: &SafetyProblem, m: &Model, k: usize) -> Vec<Model> {
    (0..=k)
        .map(|t| {
            let mut s = Model::new();
            for v in &p.vars {
                let val = m.get(&step_const(&v.name, v.sort, t)).cloned().unwrap_or_else(|| default_value(v.sort));
                s.set(v.state(), val);
            }
            s
        })
        .collect()
}

/// The model over `X` (from `a`) and `X'` (from `b`) used to evaluate a step.
pub fn step_model(a: &Model, b: &Model) -> Model {
    let mut m = a.clone();
    for (c, v) in b.iter() {
        m.set(c.to_primed(), v.clone());
    }
    m
}

#[derive(Clone, Debug)]
pub enum Reach {
    Trace(Vec<Model>),
    Unreachable,
    Unknown(String),
}

/// Is `target` reachable in exactly `k` steps?
pub fn reach_in(solver: &mut dyn Solver, p: &SafetyProblem, k: usize, target: &Term) -> Result<Reach, SmtError> {
    Ok(match solver.check(&unrolling(p, k, target))? {
        SatResult::Sat(m) => Reach::Trace(trace_from_model(p, &m, k)),
        SatResult::Unsat(_) => Reach::Unreachable,
        SatResult::Unknown(r) => Reach::Unknown(r),
    })
}

/// Exact replay: `Init(s0)`, `Tr(s_t, s_t+1)` and `Bad(s_k)` under evaluation.
pub fn replay(p: &SafetyProblem, trace: &[Model]) -> bool {
    let Some(first) = trace.first() else { return false };
    first.satisfies(&p.init)
        && trace.windows(2).all(|w| step_model(&w[0], &w[1]).satisfies(&p.trans))
        && trace.last().is_some_and(|s| s.satisfies(&p.bad))
}
