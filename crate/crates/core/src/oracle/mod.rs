//! Brute-force reference checks: bounded model checking, entailment by
//! finite expansion, and the projection / interpolation contracts.
//!
//! Nothing here reuses the engine's unrolling or projection code paths, so a
//! bug there cannot hide itself.

pub mod corpus;

use std::collections::{BTreeSet, HashMap};
use std::sync::{LazyLock, Mutex};

use serde::Serialize;

use crate::frontend::SafetyProblem;
use crate::itp::Interpolant;
use crate::mbp::{pmbp, Projection};
use crate::smt::{check_terms, domain_values, Assignments, DomainBound, Model, SatResult, SmtError, Solver};
use crate::term::{rewrite, ConstKind, Cube, Op, Sort, Term, TermKind, UConst};

pub use corpus::{load_corpus, CorpusEntry, Expected};

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("oracle query at depth {k} was undecided: {reason}")]
    Unknown { k: usize, reason: String },
    #[error(transparent)]
    Smt(#[from] SmtError),
}

#[derive(Clone, Debug, PartialEq)]
pub enum BmcResult {
    NoCexUpTo(usize),
    CexAt(usize, Vec<Model>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BmcRun {
    pub result: BmcResult,
    /// Depths whose BMC formula was checked unsatisfiable, ascending.
    pub unsat_depths: Vec<usize>,
}

impl BmcRun {
    /// Minimality record: every depth below the counterexample was refuted.
    pub fn minimal(&self) -> bool {
        match &self.result {
            BmcResult::CexAt(k, _) => self.unsat_depths == (0..*k).collect::<Vec<_>>(),
            BmcResult::NoCexUpTo(k) => self.unsat_depths == (0..=*k).collect::<Vec<_>>(),
        }
    }

    pub fn cex_length(&self) -> Option<usize> {
        match &self.result {
            BmcResult::CexAt(k, _) => Some(*k),
            BmcResult::NoCexUpTo(_) => None,
        }
    }
}

fn copy_at(c: &UConst, k: usize) -> UConst {
    UConst::aux(&format!("{}@o{k}", c.name()), c.sort())
}

fn shift(t: &Term, k: usize) -> Term {
    rewrite(t, &mut |s| match s.kind() {
        TermKind::Const(c) if c.kind() == ConstKind::State => Some(Term::cnst(&copy_at(c, k))),
        TermKind::Const(c) if c.kind() == ConstKind::Primed => Some(Term::cnst(&copy_at(c, k + 1))),
        _ => None,
    })
}

/// Bounded model checking for `k = 0, 1, ..., k_max`.
pub fn bmc(solver: &mut dyn Solver, p: &SafetyProblem, k_max: usize) -> Result<BmcRun, OracleError> {
    let mut unsat_depths = Vec::new();
    let mut prefix = vec![shift(&p.init, 0)];
    for k in 0..=k_max {
        if k > 0 {
            prefix.push(shift(&p.trans, k - 1));
        }
        let mut q = prefix.clone();
        q.push(shift(&p.bad, k));
        match check_terms(solver, &q)? {
            SatResult::Sat(m) => {
                let trace = (0..=k)
                    .map(|t| {
                        let mut s = Model::new();
                        for v in &p.vars {
                            let c = v.state();
                            let val = m.get(&copy_at(&c, t)).cloned().unwrap_or_else(|| domain_values(v.sort, &DomainBound::default())[0].clone());
                            s.set(c, val);
                        }
                        s
                    })
                    .collect();
                return Ok(BmcRun { result: BmcResult::CexAt(k, trace), unsat_depths });
            }
            SatResult::Unsat(_) => unsat_depths.push(k),
            SatResult::Unknown(reason) => return Err(OracleError::Unknown { k, reason }),
        }
    }
    Ok(BmcRun { result: BmcResult::NoCexUpTo(k_max), unsat_depths })
}

type CacheKey = (u64, u64, Vec<u64>, String);

static CACHE: LazyLock<Mutex<HashMap<CacheKey, bool>>> = LazyLock::new(|| Mutex::new(HashMap::new()));

/// `hyp => exists E. conc` for every assignment of the remaining constants,
/// everything ranging over the bounded domain (`E` over `inner`).
pub fn bounded_entails_exists(
    hyp: &Term,
    exists: &BTreeSet<UConst>,
    conc: &Term,
    bound: &DomainBound,
    inner: &DomainBound,
) -> Result<bool, SmtError> {
    let key: CacheKey = (
        hyp.id(),
        conc.id(),
        exists.iter().map(|c| Term::cnst(c).id()).collect(),
        format!("{bound:?}{inner:?}"),
    );
    if let Some(r) = CACHE.lock().unwrap().get(&key) {
        return Ok(*r);
    }
    let mut outer: BTreeSet<UConst> = hyp.consts();
    outer.extend(conc.consts());
    outer.retain(|c| !exists.contains(c));
    let inner_consts: BTreeSet<UConst> = exists.iter().filter(|c| conc.contains_const(c)).cloned().collect();
    // materialize the inner domain once
    let witnesses: Vec<Model> = Assignments::new(&inner_consts, inner)?.collect();
    let mut result = true;
    for m in Assignments::new(&outer, bound)? {
        if !m.satisfies(hyp) {
            continue;
        }
        let found = witnesses.iter().any(|w| {
            let mut full = m.clone();
            full.extend(w);
            full.satisfies(conc)
        });
        if !found {
            result = false;
            break;
        }
    }
    CACHE.lock().unwrap().insert(key, result);
    Ok(result)
}

/// `hyp => conc` over the bounded domain.
pub fn bounded_entails(hyp: &Term, conc: &Term, bound: &DomainBound) -> Result<bool, SmtError> {
    bounded_entails_exists(hyp, &BTreeSet::new(), conc, bound, bound)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ContractReport {
    /// `(condition, passed)` in the order of the contract.
    pub conditions: Vec<(String, bool)>,
}

impl ContractReport {
    pub fn passed(&self) -> bool {
        self.conditions.iter().all(|(_, ok)| *ok)
    }

    pub fn get(&self, name: &str) -> Option<bool> {
        self.conditions.iter().find(|(n, _)| n == name).map(|(_, ok)| *ok)
    }

    fn push(&mut self, name: &str, ok: bool) {
        self.conditions.push((name.to_string(), ok));
    }
}

fn is_fresh(c: &UConst) -> bool {
    c.kind() == ConstKind::Aux && c.name().starts_with(crate::mbp::WITNESS_PREFIX)
}

/// The contract of a projection `r = pmbp(U, phi, M)`.
pub fn check_mbp_contract(
    u: &BTreeSet<UConst>,
    phi: &Term,
    m: &Model,
    r: &Projection,
    bound: &DomainBound,
    inner: &DomainBound,
) -> Result<ContractReport, SmtError> {
    let mut rep = ContractReport::default();
    let psi = r.cube.to_term();
    rep.push("ground-cube", r.cube.literals().iter().all(|l| l.is_ground() && l.is_literal()));
    let phi_c = phi.consts();
    let gone: BTreeSet<UConst> = u.iter().filter(|c| !r.kept.contains(c)).cloned().collect();
    let contained = r.kept.iter().all(|c| u.contains(c) || is_fresh(c))
        && r.kept.iter().all(|c| c.sort() != Sort::Array)
        && r.cube.consts().iter().all(|c| (phi_c.contains(c) && !gone.contains(c)) || (is_fresh(c) && r.kept.contains(c)));
    rep.push("containment", contained);
    rep.push("implies-exists", bounded_entails_exists(&psi, &gone, phi, bound, inner)?);
    rep.push("model", r.model(m).satisfies(&psi));
    Ok(rep)
}

/// The contract of a partial interpolant of `A` and `B`.
pub fn check_itp_contract(a: &Term, b: &Cube, r: &Interpolant, bound: &DomainBound) -> Result<ContractReport, SmtError> {
    let mut rep = ContractReport::default();
    rep.push("ground-clause", r.clause.literals().iter().all(|l| l.is_ground() && l.is_literal()));
    let ca = a.consts();
    let cb = b.consts();
    let contained = r.extra.iter().all(|c| cb.contains(c) && !ca.contains(c))
        && r.clause.consts().iter().all(|c| (ca.contains(c) && cb.contains(c)) || r.extra.contains(c));
    rep.push("containment", contained);
    // A => forall U. clause: rename U apart so it is universally quantified
    let renamed = rewrite(&r.clause.to_term(), &mut |s| match s.kind() {
        TermKind::Const(c) if r.extra.contains(c) => Some(Term::cnst(&UConst::aux(&format!("fresh!{}", c.symbol()), c.sort()))),
        _ => None,
    });
    rep.push("a-implies", bounded_entails(a, &renamed, bound)?);
    rep.push("implies-not-b", bounded_entails(&r.clause.to_term(), &Term::not(&b.to_term()), bound)?);
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FiniteRangeReport {
    pub models: u64,
    pub outputs: usize,
    /// Number of case-split combinations the projection can distinguish.
    pub bound: u128,
}

impl FiniteRangeReport {
    pub fn passed(&self) -> bool {
        self.models > 0 && (self.outputs as u128) <= self.bound
    }
}

/// Distinct atoms of `t` (up to negation).
fn atoms(t: &Term) -> BTreeSet<Term> {
    let mut out = BTreeSet::new();
    t.visit(&mut |s| {
        if s.is_atom() {
            out.insert(s.clone());
        }
    });
    out
}

fn index_terms(t: &Term) -> BTreeSet<Term> {
    let mut out = BTreeSet::new();
    t.visit(&mut |s| {
        if matches!(s.op(), Some(Op::Select | Op::Store)) {
            out.insert(s.args()[1].clone());
        }
    });
    out
}

/// Run `pmbp(U, phi, M)` for every bounded-domain model `M` of `phi` and
/// count the distinct results.
pub fn finite_range(u: &BTreeSet<UConst>, phi: &Term, bound: &DomainBound) -> Result<FiniteRangeReport, SmtError> {
    let mut outputs: BTreeSet<(Cube, BTreeSet<UConst>)> = BTreeSet::new();
    let mut models = 0;
    for m in Assignments::new(&phi.consts(), bound)? {
        if !m.satisfies(phi) {
            continue;
        }
        models += 1;
        if let Ok(r) = pmbp(u, phi, &m) {
            outputs.insert((r.cube, r.kept));
        }
    }
    // implicant polarity per atom, index (dis)equalities per pair, and per
    // eliminated integer a choice of bound and residue
    let a = atoms(phi).len() as u32;
    let n_idx = index_terms(phi).len() as u32;
    let pairs = n_idx * n_idx.saturating_sub(1) / 2;
    let ints = u.iter().filter(|c| c.sort() == Sort::Int).count() as u32;
    let reads = phi.dag_size() as u128;
    let bound = 3u128.saturating_pow(a).saturating_mul(2u128.saturating_pow(pairs)).saturating_mul((reads * 8).saturating_pow(ints.max(1)));
    Ok(FiniteRangeReport { models, outputs: outputs.len(), bound })
}
