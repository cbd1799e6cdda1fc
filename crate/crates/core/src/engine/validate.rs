//! Independent checks of a verdict against the problem.
//!
//! Counterexamples are replayed by evaluation. For an invariant `Inv` (a set
//! of universally closed clauses) the three conditions `Init => Inv`,
//! `Inv /\ Tr => Inv'` and `Inv => !Bad` are first checked with ground
//! instances of `Inv` (unsat proves the condition), then with a quantified
//! query when the backend supports one.

use std::collections::BTreeSet;

use serde::Serialize;

use super::unroll::replay;
use super::{ground_instances, index_terms, Verdict};
use crate::frontend::SafetyProblem;
use crate::smt::{check_terms, SatResult, SmtError, Solver};
use crate::term::{prime, skolemize, Clause, Term};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Certified,
    Refuted,
    Unknown(String),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Validation {
    pub checks: Vec<(String, CheckStatus)>,
}

impl Validation {
    pub fn certified(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|(_, s)| *s == CheckStatus::Certified)
    }

    pub fn refuted(&self) -> bool {
        self.checks.iter().any(|(_, s)| *s == CheckStatus::Refuted)
    }

    pub fn status(&self, name: &str) -> Option<&CheckStatus> {
        self.checks.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }
}

/// Combine per-clause results: any refutation wins, then any unknown.
fn combine(parts: Vec<CheckStatus>) -> CheckStatus {
    if parts.contains(&CheckStatus::Refuted) {
        return CheckStatus::Refuted;
    }
    parts.into_iter().find(|s| matches!(s, CheckStatus::Unknown(_))).unwrap_or(CheckStatus::Certified)
}

/// `ground` contradicts the closures of `inv`? Ground instances first, then
/// the quantified fallback.
fn refute(solver: &mut dyn Solver, ground: Vec<Term>, inv: &[Clause], extra: &Term, max: usize) -> Result<CheckStatus, SmtError> {
    let mut cands: BTreeSet<Term> = index_terms(extra);
    for g in &ground {
        cands.extend(index_terms(g));
    }
    let cands: Vec<Term> = cands.into_iter().collect();
    let mut q = ground.clone();
    q.extend(inv.iter().filter(|c| c.free_vars().is_empty()).map(Clause::to_term));
    q.extend(ground_instances(inv, &cands, max));
    if check_terms(solver, &q)?.is_unsat() {
        return Ok(CheckStatus::Certified);
    }
    let universal: Vec<Term> = inv.iter().map(Clause::to_term).collect();
    Ok(match solver.check_quantified(&ground, &universal) {
        SatResult::Unsat(_) => CheckStatus::Certified,
        SatResult::Sat(_) => CheckStatus::Refuted,
        SatResult::Unknown(r) => CheckStatus::Unknown(r),
    })
}

fn validate_invariant(p: &SafetyProblem, inv: &[Clause], solver: &mut dyn Solver, max: usize) -> Result<Validation, SmtError> {
    let mut out = Validation::default();
    // initiation: exact, one skolemized negation per clause
    let mut parts = Vec::new();
    for c in inv {
        let neg = skolemize(&Term::not(&c.to_term()));
        parts.push(match check_terms(solver, &[p.init.clone(), neg])? {
            SatResult::Unsat(_) => CheckStatus::Certified,
            SatResult::Sat(_) => CheckStatus::Refuted,
            SatResult::Unknown(r) => CheckStatus::Unknown(r),
        });
    }
    out.checks.push(("init".into(), combine(parts)));

    let mut parts = Vec::new();
    for c in inv {
        let Ok(primed) = prime(&Term::not(&c.to_term())) else {
            parts.push(CheckStatus::Unknown("clause mentions primed constants".into()));
            continue;
        };
        let goal = skolemize(&primed);
        parts.push(refute(solver, vec![p.trans.clone(), goal.clone()], inv, &p.trans, max)?);
    }
    out.checks.push(("consecution".into(), combine(parts)));

    out.checks.push(("safety".into(), refute(solver, vec![p.bad.clone()], inv, &p.trans, max)?));
    Ok(out)
}

/// Check a verdict; resource limits have nothing to check.
pub fn validate_verdict(p: &SafetyProblem, v: &Verdict, solver: &mut dyn Solver, max_instances: usize) -> Result<Validation, SmtError> {
    match v {
        Verdict::Cex { trace, length } => {
            let ok = trace.len() == length + 1 && replay(p, trace);
            let status = if ok { CheckStatus::Certified } else { CheckStatus::Refuted };
            Ok(Validation { checks: vec![("replay".into(), status)] })
        }
        Verdict::Safe { invariant, .. } => validate_invariant(p, invariant, solver, max_instances),
        Verdict::ResourceLimit { .. } => Ok(Validation::default()),
    }
}
