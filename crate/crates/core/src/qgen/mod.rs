//! Quantifier generalization: turn a lemma `(l, xi)` into a more general
//! `(g, xi | rho)` with `g rho == l`, keeping it valid relative to the frame.
//!
//! Two candidate generators:
//! * *simple* — an Int term used inside an array index becomes a fresh
//!   variable, bounded by the clause's own bounds on that term;
//! * *arith* — a literal and the antecedents sharing its shape (up to Int
//!   leaves) are replaced by a pattern over fresh variables, guarded by the
//!   hull of the observed leaf vectors.

pub mod hull;

use std::collections::BTreeSet;

use log::debug;
use serde::Serialize;

use crate::itp::{generalize_lemma, strengthen_bounds};
use crate::smt::{SatResult, SmtError, Solver};
use crate::term::{abs, prime, rewrite, skolemize, unprime, Clause, Op, Substitution, Term, TermKind, UConst};

pub use hull::{ch, Hull};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum QGenMode {
    #[default]
    Off,
    Simple,
    Arith,
    Both,
}

impl QGenMode {
    pub fn simple(self) -> bool {
        matches!(self, QGenMode::Simple | QGenMode::Both)
    }

    pub fn arith(self) -> bool {
        matches!(self, QGenMode::Arith | QGenMode::Both)
    }
}

impl std::str::FromStr for QGenMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "off" => Ok(QGenMode::Off),
            "simple" => Ok(QGenMode::Simple),
            "arith" => Ok(QGenMode::Arith),
            "both" => Ok(QGenMode::Both),
            _ => Err(format!("unknown qgen mode `{s}` (off|simple|arith|both)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CandidateKind {
    Simple,
    Arith,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenCandidate {
    pub body: Clause,
    pub rho: Substitution,
    pub kind: CandidateKind,
}

/// Lowest `n` indices not in `used`.
fn fresh_vars(used: &BTreeSet<u32>, n: usize) -> Vec<u32> {
    (0..).filter(|i| !used.contains(i)).take(n).collect()
}

fn replace(t: &Term, from: &Term, to: &Term) -> Term {
    rewrite(t, &mut |s| (s == from).then(|| to.clone()))
}

/// Int subterms of array-read indices, in pre-order of the clause.
fn index_subterms(l: &Clause) -> Vec<Term> {
    let mut out: Vec<Term> = Vec::new();
    for lit in l.literals() {
        lit.visit(&mut |s| {
            if s.op() == Some(Op::Select) {
                s.args()[1].visit(&mut |u| {
                    if u.is_ground() && !out.contains(u) {
                        out.push(u.clone());
                    }
                });
            }
        });
    }
    out
}

/// Candidates of the simple generator for every index term of `l`.
/// `reserved` are variable indices that must not be reused.
pub fn simple_candidates(l: &Clause, reserved: &BTreeSet<u32>) -> Vec<GenCandidate> {
    let mut used = l.free_vars();
    used.extend(reserved);
    let v = Term::var(fresh_vars(&used, 1)[0]);
    let mut out: Vec<GenCandidate> = Vec::new();
    for t in index_subterms(l) {
        let mut lower = false;
        let mut upper = false;
        let mut lits = Vec::new();
        for lit in l.literals() {
            // antecedent atom of the clause literal
            let ante = Term::not(lit);
            let bound = match ante.kind() {
                TermKind::App(op @ (Op::Le | Op::Lt), args) if args[1] == t && args[0] != t => {
                    lower = true;
                    Some(Term::app(*op, &[args[0].clone(), v.clone()]))
                }
                TermKind::App(op @ (Op::Le | Op::Lt), args) if args[0] == t && args[1] != t => {
                    upper = true;
                    Some(Term::app(*op, &[v.clone(), args[1].clone()]))
                }
                _ => None,
            };
            match bound {
                Some(b) => lits.push(Term::not(&b)),
                None => lits.push(rewrite(lit, &mut |s| {
                    (s.op() == Some(Op::Select) && s.args()[1].contains(&t))
                        .then(|| Term::select(&s.args()[0], &replace(&s.args()[1], &t, &v)))
                })),
            }
        }
        if !lower && !upper {
            continue;
        }
        // a missing side is bounded by the term itself
        if !lower {
            lits.push(Term::lt(&v, &t));
        }
        if !upper {
            lits.push(Term::lt(&t, &v));
        }
        let body = Clause::new(lits);
        let rho: Substitution = [(v.as_var().unwrap(), t.clone())].into_iter().collect();
        let cand = GenCandidate { body, rho, kind: CandidateKind::Simple };
        if !out.iter().any(|c| c.body == cand.body) {
            out.push(cand);
        }
    }
    out
}

/// Int leaves of `t` in tree pre-order, skipping coefficients and moduli.
fn leaves(t: &Term, out: &mut Vec<i64>) {
    match t.kind() {
        TermKind::Int(n) => out.push(*n),
        TermKind::App(Op::Mul, args) => leaves(&args[1], out),
        TermKind::App(Op::Mod, args) => leaves(&args[0], out),
        TermKind::App(_, args) => args.iter().for_each(|a| leaves(a, out)),
        _ => {}
    }
}

/// Equal up to the values of Int leaves.
fn same_shape(a: &Term, b: &Term) -> bool {
    match (a.kind(), b.kind()) {
        (TermKind::Int(_), TermKind::Int(_)) => true,
        (TermKind::App(oa, xa), TermKind::App(ob, xb)) => {
            oa == ob
                && xa.len() == xb.len()
                && match oa {
                    Op::Mul => xa[0] == xb[0] && same_shape(&xa[1], &xb[1]),
                    Op::Mod => xa[1] == xb[1] && same_shape(&xa[0], &xb[0]),
                    _ => xa.iter().zip(xb).all(|(x, y)| same_shape(x, y)),
                }
        }
        _ => a == b,
    }
}

/// Replace the leaves (numbered as in [`leaves`]) listed in `subst`.
fn replace_leaves(t: &Term, subst: &[(usize, Term)], next: &mut usize) -> Term {
    match t.kind() {
        TermKind::Int(_) => {
            let k = *next;
            *next += 1;
            subst.iter().find(|(i, _)| *i == k).map(|(_, v)| v.clone()).unwrap_or_else(|| t.clone())
        }
        TermKind::App(Op::Mul, args) => Term::mul(args[0].as_int().unwrap(), &replace_leaves(&args[1], subst, next)),
        TermKind::App(Op::Mod, args) => Term::modulo(&replace_leaves(&args[0], subst, next), args[1].as_int().unwrap()),
        TermKind::App(op, args) => {
            let new: Vec<Term> = args.iter().map(|a| replace_leaves(a, subst, next)).collect();
            Term::app(*op, &new)
        }
        _ => t.clone(),
    }
}

/// Candidates of the arithmetic generator, one per consequent literal that
/// has at least one same-shaped antecedent.
pub fn arith_candidates(l: &Clause, reserved: &BTreeSet<u32>) -> Vec<GenCandidate> {
    let mut used = l.free_vars();
    used.extend(reserved);
    let lits = l.literals();
    let mut out: Vec<GenCandidate> = Vec::new();
    for (n, cons) in lits.iter().enumerate() {
        let matches: Vec<usize> =
            (0..lits.len()).filter(|&k| k != n && same_shape(&Term::not(&lits[k]), cons)).collect();
        if matches.is_empty() {
            continue;
        }
        let mut rows: Vec<Vec<i64>> = Vec::new();
        for &k in &matches {
            let mut v = Vec::new();
            leaves(&Term::not(&lits[k]), &mut v);
            rows.push(v);
        }
        let mut own = Vec::new();
        leaves(cons, &mut own);
        rows.push(own.clone());
        let positions: Vec<usize> = (0..own.len()).filter(|&p| rows.iter().any(|r| r[p] != own[p])).collect();
        if positions.is_empty() {
            continue;
        }
        let points: Vec<Vec<i64>> = rows.iter().map(|r| positions.iter().map(|&p| r[p]).collect()).collect();
        let hull = ch(&points);
        let idx = fresh_vars(&used, positions.len());
        let vars: Vec<Term> = idx.iter().map(|&i| Term::var(i)).collect();
        let subst: Vec<(usize, Term)> = positions.iter().cloned().zip(vars.iter().cloned()).collect();
        let pattern = replace_leaves(cons, &subst, &mut 0);
        let mut body: Vec<Term> = hull.literals(&vars).iter().map(Term::not).collect();
        body.extend(lits.iter().enumerate().filter(|(k, _)| *k != n).map(|(_, t)| t.clone()));
        body.push(pattern);
        let rho: Substitution = idx.iter().zip(&points[points.len() - 1]).map(|(&i, &x)| (i, Term::int(x))).collect();
        let cand = GenCandidate { body: Clause::new(body), rho, kind: CandidateKind::Arith };
        if !out.iter().any(|c| c.body == cand.body) {
            out.push(cand);
        }
    }
    out
}

/// The first arithmetic candidate, if any.
pub fn arith_qgen(l: &Clause, reserved: &BTreeSet<u32>) -> Option<GenCandidate> {
    arith_candidates(l, reserved).into_iter().next()
}

/// Structural side conditions: `g rho` reproduces `l`, and the new variables
/// are disjoint from the old ones and from `dom(xi)`.
pub fn well_formed(l: &Clause, xi: &Substitution, c: &GenCandidate) -> bool {
    let back = c.body.map(|t| c.rho.apply(t));
    let dom = c.rho.domain();
    back == *l && dom.is_disjoint(&l.free_vars()) && dom.is_disjoint(&xi.domain())
}

/// `(!g)'` with its free variables skolemized, as literal conjuncts.
fn primed_goal(g: &Clause) -> Option<Vec<Term>> {
    let lits: Option<Vec<Term>> = g.literals().iter().map(|t| prime(&Term::not(t)).ok().map(|x| skolemize(&x))).collect();
    lits
}

/// Outcome of a validity check of a candidate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Validity {
    Valid(Vec<String>),
    Invalid,
    Unknown,
}

/// Is `A => forall. g'`? Checked as `A /\ !g'_sk` unsatisfiable.
pub fn check_valid(solver: &mut dyn Solver, a: &Term, g: &Clause) -> Result<Validity, SmtError> {
    let Some(goal) = primed_goal(g) else { return Ok(Validity::Invalid) };
    let mut q = vec![("A".to_string(), a.clone())];
    q.extend(goal.into_iter().enumerate().map(|(k, t)| (format!("g{k}"), t)));
    Ok(match solver.check(&q)? {
        SatResult::Unsat(core) => Validity::Valid(core),
        SatResult::Sat(_) => Validity::Invalid,
        SatResult::Unknown(_) => Validity::Unknown,
    })
}

/// Knobs of [`qgen`].
#[derive(Clone, Debug)]
pub struct QGenOptions {
    /// Try every candidate rather than only the first.
    pub all_candidates: bool,
    /// Literal-dropping passes over an accepted candidate.
    pub passes: usize,
    /// Constants for tightening bounds of an accepted candidate; empty
    /// disables tightening.
    pub consts: BTreeSet<i64>,
}

impl Default for QGenOptions {
    fn default() -> Self {
        QGenOptions { all_candidates: true, passes: 1, consts: BTreeSet::new() }
    }
}

/// Drop literals of a quantified clause while `A => forall. g'` stays valid,
/// then tighten its bounds to `consts`.
pub fn generalize_quantified(solver: &mut dyn Solver, g: &Clause, a: &Term, passes: usize, consts: &BTreeSet<i64>) -> Result<Clause, SmtError> {
    let Ok(sk) = g.literals().iter().map(|t| prime(t).map(|x| skolemize(&x))).collect::<Result<Vec<_>, _>>() else {
        return Ok(g.clone());
    };
    let mut shrunk = generalize_lemma(solver, &Clause::new(sk), a, passes)?;
    if !consts.is_empty() {
        shrunk = strengthen_bounds(solver, &shrunk, a, consts)?;
    }
    let t = shrunk.to_term();
    let Ok(un) = unprime(&t) else { return Ok(g.clone()) };
    let skolems: BTreeSet<UConst> = un.consts().into_iter().filter(|c| c.skolem_index().is_some()).collect();
    match abs(&skolems, &un) {
        Ok((body, _)) => Ok(Clause::from_term(&body).unwrap_or_else(|| g.clone())),
        Err(_) => Ok(g.clone()),
    }
}

/// A range literal on a variable: `t <= v` (`upper`) or `v < t`.
fn range_bound(l: &Term) -> Option<(u32, Term, bool)> {
    let (op, a) = (l.op()?, l.args());
    match (op, a.first().and_then(Term::as_var), a.get(1).and_then(Term::as_var)) {
        (Op::Le, None, Some(v)) if a[0].is_ground() => Some((v, a[0].clone(), true)),
        (Op::Lt, Some(v), None) if a[1].is_ground() => Some((v, a[1].clone(), false)),
        _ => None,
    }
}

/// Replace one range bound of the quantified clause `g` by another ground
/// term from `terms`, then drop ground literals that became unnecessary.
/// `holds` decides acceptance (it must at least ensure the result still
/// blocks whatever `g` blocked). Returns the first accepted rewrite.
pub fn substitute_bounds(
    g: &Clause,
    terms: &[Term],
    holds: &mut dyn FnMut(&Clause) -> Result<bool, SmtError>,
) -> Result<Option<Clause>, SmtError> {
    let lits = g.literals().to_vec();
    for (p, l) in lits.iter().enumerate() {
        let Some((v, t, upper)) = range_bound(l) else { continue };
        for s in terms.iter().filter(|s| **s != t && s.is_ground() && s.sort() == t.sort()) {
            let var = Term::var(v);
            let mut cand = lits.clone();
            cand[p] = if upper { Term::le(s, &var) } else { Term::lt(&var, s) };
            if !holds(&Clause::new(cand.clone()))? {
                continue;
            }
            let mut k = 0;
            while k < cand.len() {
                if k != p && cand[k].is_ground() && cand.len() > 1 {
                    let mut fewer = cand.clone();
                    fewer.remove(k);
                    if holds(&Clause::new(fewer.clone()))? {
                        cand = fewer;
                        continue;
                    }
                }
                k += 1;
            }
            return Ok(Some(Clause::new(cand)));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug)]
pub struct Generalized {
    pub body: Clause,
    pub inst: Substitution,
    pub kind: CandidateKind,
    /// Unsatisfiable core witnessing validity of the accepted candidate.
    pub core: Vec<String>,
    pub tried: usize,
}

/// Run the enabled generators on `(l, xi)` against `a = F(qi(Q))`; the first
/// valid candidate wins (or only the very first is tried when
/// `all_candidates` is false). Unknown validity rejects a candidate.
pub fn qgen(
    solver: &mut dyn Solver,
    mode: QGenMode,
    l: &Clause,
    xi: &Substitution,
    a: &Term,
    opts: &QGenOptions,
) -> Result<Option<Generalized>, SmtError> {
    let reserved = xi.domain();
    let mut cands = Vec::new();
    if mode.simple() {
        cands.extend(simple_candidates(l, &reserved));
    }
    if mode.arith() {
        cands.extend(arith_candidates(l, &reserved));
    }
    if !opts.all_candidates {
        cands.truncate(1);
    }
    for (tried, c) in cands.into_iter().enumerate() {
        if !well_formed(l, xi, &c) {
            debug!("qgen: ill-formed candidate {}", c.body);
            continue;
        }
        if let Validity::Valid(core) = check_valid(solver, a, &c.body)? {
            let body = generalize_quantified(solver, &c.body, a, opts.passes, &opts.consts)?;
            let inst = xi.union(&c.rho).restrict(&body.free_vars());
            debug!("qgen: {} -> {}", l, body);
            return Ok(Some(Generalized { body, inst, kind: c.kind, core, tried: tried + 1 }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests;
