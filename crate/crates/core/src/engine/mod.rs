//! IC3 over frames of universally quantified lemmas.
//!
//! Frames `Q_1..Q_N` hold lemmas `(l, xi)`: a clause `l` over the state
//! constants whose free variables are universally quantified, plus the
//! instance `xi` under which it was learned. Every solver query is ground: a
//! frame contributes only its recorded instances `qi(Q_i)`, except in
//! `push`, where additional instances are drawn from the terms of the query.

pub mod events;
pub mod unroll;
pub mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use log::{debug, info};
use serde::Serialize;

use crate::frontend::SafetyProblem;
use crate::itp::{constants_of, generalize_lemma_with, pitp, strengthen_bounds_with, ItpError};
use crate::mbp::{pmbp, MbpError};
use crate::qgen::{qgen, substitute_bounds, QGenMode, QGenOptions};
use crate::smt::{Model, SatResult, SmtError, Solver, SolverStats};
use crate::term::{abs, prime, rewrite, skolemize, unprime, Clause, Cube, Op, Sort, Substitution, Term, TermError, TermKind, UConst};

pub use events::{Event, EventLog, Rule};
pub use validate::{validate_verdict, CheckStatus, Validation};

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Smt(#[from] SmtError),
    #[error("projection failed: {0}")]
    Mbp(#[from] MbpError),
    #[error(transparent)]
    Term(#[from] TermError),
}

/// Skolems beyond those of the lemma considered when checking qgen candidates.
const QGEN_SKOLEMS: u32 = 3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Config {
    pub max_depth: usize,
    pub qgen: QGenMode,
    /// Cap on extra instances per lemma in push queries.
    pub max_instances: usize,
    /// Re-enqueue a blocked obligation one frame higher.
    pub push_pobs: bool,
    pub generalize_passes: usize,
    /// Try every QGen candidate rather than only the first.
    pub qgen_all_candidates: bool,
    /// Turn disequalities between read-free Int terms of predecessor cubes
    /// into the strict inequality true in the model.
    pub split_diseq: bool,
    /// Tighten bound literals of new lemmas to constants of the problem.
    pub strengthen_bounds: bool,
    /// Generalize new lemmas relative to themselves (`Q /\ c /\ Tr => c'`).
    pub relative_induction: bool,
    /// In predecessor cubes, write numeral array indices as an equal state
    /// variable when the cube fixes one.
    pub name_indices: bool,
    /// Try moving range bounds of quantified lemmas onto other state terms.
    pub substitute_bounds: bool,
    /// Add each new lemma at the highest frame where it is inductive.
    pub eager_push: bool,
    #[serde(skip)]
    pub timeout: Option<Duration>,
    pub max_pobs: Option<usize>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            max_depth: 32,
            qgen: QGenMode::Off,
            max_instances: 64,
            push_pobs: false,
            generalize_passes: 1,
            qgen_all_candidates: true,
            split_diseq: true,
            strengthen_bounds: true,
            relative_induction: true,
            name_indices: false,
            substitute_bounds: true,
            eager_push: false,
            timeout: None,
            max_pobs: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Interpolant,
    Qgen,
    Push,
    Init,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lemma {
    pub body: Clause,
    pub inst: Substitution,
    pub origin: Origin,
}

impl Lemma {
    /// `body` under `inst`.
    pub fn instance(&self) -> Term {
        self.inst.apply(&self.body.to_term())
    }
}

#[derive(Clone, Debug)]
pub struct Pob {
    pub cube: Cube,
    pub inst: Substitution,
    pub frame: usize,
    pub parent: Option<usize>,
    /// `cube'` with every variable `v_i` replaced by `sk_i`, fixed at creation.
    pub goal: Cube,
    pub goal_text: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    /// The conjunction of the universal closures of `invariant` is inductive.
    Safe { invariant: Vec<Clause>, frame: usize },
    /// `trace` has `length + 1` states.
    Cex { trace: Vec<Model>, length: usize },
    ResourceLimit { reason: String },
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Safe { .. } => "safe",
            Verdict::Cex { .. } => "cex",
            Verdict::ResourceLimit { .. } => "resource-limit",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Audit {
    pub checks: u64,
    pub monotonicity_violations: u64,
    pub nonground_queries: u64,
    pub skolem_mismatches: u64,
}

impl Audit {
    pub fn clean(&self) -> bool {
        self.monotonicity_violations == 0 && self.nonground_queries == 0 && self.skolem_mismatches == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Stats {
    pub depth: usize,
    pub lemmas: usize,
    pub inv: Option<usize>,
    pub time_s: f64,
    pub verdict: String,
    pub pobs: usize,
    pub qgen_accepted: usize,
    pub solver: SolverStats,
}

#[derive(Debug)]
pub struct Outcome {
    pub verdict: Verdict,
    pub stats: Stats,
    pub audit: Audit,
    pub events: Vec<Event>,
    /// Lemma pool and, per frame `1..=N`, the ids of its lemmas.
    pub lemmas: Vec<Lemma>,
    pub frames: Vec<BTreeSet<usize>>,
}

/// Solver wrapper counting non-ground queries.
struct Audited<'a> {
    inner: &'a mut dyn Solver,
    nonground: u64,
}

impl Solver for Audited<'_> {
    fn check(&mut self, assertions: &[(String, Term)]) -> Result<SatResult, SmtError> {
        if assertions.iter().any(|(_, t)| !t.is_ground()) {
            self.nonground += 1;
        }
        self.inner.check(assertions)
    }

    fn check_quantified(&mut self, ground: &[Term], universal: &[Term]) -> SatResult {
        self.inner.check_quantified(ground, universal)
    }

    fn stats(&self) -> SolverStats {
        self.inner.stats()
    }

    fn name(&self) -> String {
        self.inner.name()
    }
}

enum Halt {
    /// A counterexample of the given length exists.
    Cex(usize),
    Limit(String),
    Error(EngineError),
}

impl From<SmtError> for Halt {
    fn from(e: SmtError) -> Self {
        Halt::Error(e.into())
    }
}

impl From<MbpError> for Halt {
    fn from(e: MbpError) -> Self {
        Halt::Error(e.into())
    }
}

impl From<TermError> for Halt {
    fn from(e: TermError) -> Self {
        Halt::Error(e.into())
    }
}

/// Ground Int index arguments of every select and store in `t`.
pub fn index_terms(t: &Term) -> BTreeSet<Term> {
    let mut out = BTreeSet::new();
    t.visit(&mut |s| {
        if matches!(s.op(), Some(Op::Select | Op::Store)) && s.args()[1].is_ground() {
            out.insert(s.args()[1].clone());
        }
    });
    out
}

/// For each open clause, up to `max` instances with its variables drawn from
/// the Int terms `cands`, enumerated lexicographically.
pub fn ground_instances(bodies: &[Clause], cands: &[Term], max: usize) -> Vec<Term> {
    let cands: Vec<&Term> = cands.iter().filter(|t| t.is_ground() && t.sort() == Sort::Int).collect();
    let mut out = Vec::new();
    if cands.is_empty() {
        return out;
    }
    for body in bodies {
        let vars: Vec<u32> = body.free_vars().into_iter().collect();
        if vars.is_empty() {
            continue;
        }
        let t = body.to_term();
        let mut idx = vec![0usize; vars.len()];
        'tuples: for _ in 0..max {
            let s: Substitution = vars.iter().zip(&idx).map(|(&v, &k)| (v, cands[k].clone())).collect();
            out.push(s.apply(&t));
            // odometer, last position fastest
            let mut pos = vars.len();
            loop {
                if pos == 0 {
                    break 'tuples;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < cands.len() {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }
    out
}

fn has_select(t: &Term) -> bool {
    let mut found = false;
    t.visit(&mut |s| found |= s.op() == Some(Op::Select));
    found
}

/// Rewrite numeral array indices `c` to a state variable `x` when the cube
/// also contains `x = c`; the result is equivalent to the input cube.
fn name_indices(lits: Vec<Term>) -> Vec<Term> {
    let mut names: BTreeMap<i64, Term> = BTreeMap::new();
    for l in &lits {
        if l.op() != Some(Op::Eq) {
            continue;
        }
        let (a, b) = (&l.args()[0], &l.args()[1]);
        for (x, c) in [(a, b), (b, a)] {
            if let (Some(k), Some(u)) = (c.as_int(), x.as_const()) {
                if u.is_state() && u.sort() == Sort::Int {
                    names.entry(k).or_insert_with(|| x.clone());
                }
            }
        }
    }
    if names.is_empty() {
        return lits;
    }
    fn go(t: &Term, names: &BTreeMap<i64, Term>) -> Term {
        rewrite(t, &mut |s| {
            if s.op() != Some(Op::Select) {
                return None;
            }
            let (arr, idx) = (go(&s.args()[0], names), go(&s.args()[1], names));
            let idx = idx.as_int().and_then(|k| names.get(&k)).cloned().unwrap_or(idx);
            Some(Term::select(&arr, &idx))
        })
    }
    lits.iter().map(|l| go(l, &names)).collect()
}

/// Disjunctive normal form of an NNF formula.
fn dnf(t: &Term) -> Vec<Vec<Term>> {
    match t.kind() {
        TermKind::Bool(true) => vec![vec![]],
        TermKind::Bool(false) => vec![],
        TermKind::App(Op::Or, args) => args.iter().flat_map(dnf).collect(),
        TermKind::App(Op::And, args) => {
            let mut acc = vec![vec![]];
            for a in args {
                let part = dnf(a);
                let mut next = Vec::new();
                for x in &acc {
                    for y in &part {
                        let mut z: Vec<Term> = x.clone();
                        z.extend(y.iter().cloned());
                        next.push(z);
                    }
                }
                acc = next;
            }
            acc
        }
        _ => vec![vec![t.clone()]],
    }
}

/// Body constants other than skolems; lemma bodies are over `X` and variables.
fn skolems_of(t: &Term) -> BTreeSet<UConst> {
    t.consts().into_iter().filter(|c| c.skolem_index().is_some()).collect()
}

fn goal_of(cube: &Cube) -> Result<Cube, TermError> {
    let t = skolemize(&prime(&cube.to_term())?);
    Ok(Cube::from_term(&t).unwrap_or_else(|| Cube::new([t])))
}

pub struct Engine<'a> {
    p: &'a SafetyProblem,
    cfg: Config,
    solver: Audited<'a>,
    init_p: Term,
    primed: BTreeSet<UConst>,
    tr_index: BTreeSet<Term>,
    /// Integer constants of the problem, for bound strengthening.
    consts: BTreeSet<i64>,
    bad_cubes: Vec<Cube>,
    pool: Vec<Lemma>,
    frames: Vec<BTreeSet<usize>>,
    n: usize,
    pobs: Vec<Pob>,
    queue: BTreeSet<(usize, usize)>,
    log: EventLog,
    audit: Audit,
    qgen_accepted: usize,
    start: Instant,
}

impl<'a> Engine<'a> {
    pub fn new(p: &'a SafetyProblem, cfg: Config, solver: &'a mut dyn Solver) -> Self {
        let init_p = prime(&p.init).expect("init is over state variables");
        let bad_cubes = dnf(&p.bad).into_iter().map(Cube::new).collect();
        Engine {
            p,
            cfg,
            solver: Audited { inner: solver, nonground: 0 },
            init_p,
            primed: p.primed_consts(),
            tr_index: index_terms(&p.trans),
            consts: constants_of(&Term::and([p.init.clone(), p.trans.clone(), p.bad.clone()])),
            bad_cubes,
            pool: Vec::new(),
            frames: vec![BTreeSet::new()],
            n: 0,
            pobs: Vec::new(),
            queue: BTreeSet::new(),
            log: EventLog::default(),
            audit: Audit::default(),
            qgen_accepted: 0,
            start: Instant::now(),
        }
    }

    pub fn with_event_log(mut self, log: EventLog) -> Self {
        self.log = log;
        self
    }

    fn solver_ms(&self) -> f64 {
        self.solver.stats().time.as_secs_f64() * 1e3
    }

    fn event(&mut self, rule: Rule, frame: usize, pob: Option<usize>, lemma: Option<usize>, since_ms: f64, detail: Option<String>) {
        let spent = self.solver_ms() - since_ms;
        self.log.record(rule, frame, pob, lemma, spent, detail);
    }

    fn check_limits(&self) -> Result<(), Halt> {
        if let Some(t) = self.cfg.timeout {
            if self.start.elapsed() > t {
                return Err(Halt::Limit(format!("time limit of {:.1}s exceeded", t.as_secs_f64())));
            }
        }
        if let Some(k) = self.cfg.max_pobs {
            if self.pobs.len() > k {
                return Err(Halt::Limit(format!("more than {k} proof obligations")));
            }
        }
        Ok(())
    }

    /// Lemma bodies of frame `i >= 1`.
    pub fn bodies(&self, i: usize) -> BTreeSet<&Clause> {
        self.frames[i].iter().map(|&id| &self.pool[id].body).collect()
    }

    /// `qi(Q_i)`; `Q_0` is `Init`.
    fn instances(&mut self, i: usize) -> Vec<Term> {
        if i == 0 {
            return vec![self.p.init.clone()];
        }
        let mut out = Vec::new();
        for &id in &self.frames[i] {
            let t = self.pool[id].instance();
            if !out.contains(&t) {
                out.push(t);
            }
        }
        out
    }

    /// `F(qi(Q_i)) = (qi(Q_i) /\ Tr) \/ Init'`.
    fn f_of(&mut self, i: usize) -> Term {
        let mut conj = self.instances(i);
        conj.push(self.p.trans.clone());
        Term::or([Term::and(conj), self.init_p.clone()])
    }

    /// `qi(Q_i)` plus up to `max_instances` further instances per lemma,
    /// built from index terms of `Tr`, of `goal` and of recorded instances.
    fn instantiate(&mut self, i: usize, goal: &Term) -> Vec<Term> {
        self.instantiate_with(i, index_terms(goal))
    }

    fn instantiate_with(&mut self, i: usize, extra: BTreeSet<Term>) -> Vec<Term> {
        let mut out = self.instances(i);
        let mut cands: BTreeSet<Term> = self.tr_index.clone();
        cands.extend(extra);
        let mut bodies: BTreeSet<Clause> = BTreeSet::new();
        for &id in &self.frames[i] {
            let l = &self.pool[id];
            cands.extend(l.inst.range().into_iter().filter(|t| t.is_ground()));
            if !l.body.free_vars().is_empty() {
                bodies.insert(l.body.clone());
            }
        }
        let cands: Vec<Term> = cands.into_iter().collect();
        let bodies: Vec<Clause> = bodies.into_iter().collect();
        for t in ground_instances(&bodies, &cands, self.cfg.max_instances) {
            if !out.contains(&t) {
                out.push(t);
            }
        }
        out
    }

    fn add_lemma(&mut self, body: Clause, inst: Substitution, origin: Origin, upto: usize) -> usize {
        let id = match self.pool.iter().position(|l| l.body == body && l.inst == inst) {
            Some(id) => id,
            None => {
                self.pool.push(Lemma { body, inst, origin });
                self.pool.len() - 1
            }
        };
        for j in 1..=upto {
            self.frames[j].insert(id);
        }
        id
    }

    fn new_pob(&mut self, cube: Cube, inst: Substitution, frame: usize, parent: Option<usize>) -> Result<usize, Halt> {
        let goal = goal_of(&cube)?;
        let goal_text = goal.to_string();
        self.pobs.push(Pob { cube, inst, frame, parent, goal, goal_text });
        let id = self.pobs.len() - 1;
        self.queue.insert((frame, id));
        Ok(id)
    }

    fn audit_frames(&mut self) {
        self.audit.checks += 1;
        for i in 1..self.n {
            let next = self.bodies(i + 1);
            let cur = self.bodies(i);
            if !next.is_subset(&cur) {
                self.audit.monotonicity_violations += 1;
            }
        }
    }

    fn audit_pob(&mut self, id: usize) {
        let pob = &self.pobs[id];
        let fresh = goal_of(&pob.cube).map(|g| g.to_string()).unwrap_or_default();
        if fresh != pob.goal_text {
            self.audit.skolem_mismatches += 1;
        }
    }

    /// Predecessor cube from a model of `qi(Q_{i-1}) /\ Tr /\ goal'`.
    fn predecessor(&mut self, id: usize, m: &Model) -> Result<(Cube, Substitution), Halt> {
        let goal = self.pobs[id].goal.to_term();
        let phi = Term::and([self.p.trans.clone(), goal.clone()]);
        let mut u = self.primed.clone();
        u.extend(skolems_of(&goal));
        let m = m.restrict(&phi.consts());
        let proj = pmbp(&u, &phi, &m)?;
        let model = proj.model(&m);
        let lits: Vec<Term> = proj
            .cube
            .literals()
            .iter()
            .map(|l| match l.kind() {
                TermKind::App(Op::Not, a)
                    if self.cfg.split_diseq
                        && a[0].op() == Some(Op::Eq)
                        && a[0].args()[0].sort() == Sort::Int
                        && !has_select(&a[0]) =>
                {
                    let (x, y) = (&a[0].args()[0], &a[0].args()[1]);
                    match (model.eval_int(x), model.eval_int(y)) {
                        (Ok(vx), Ok(vy)) if vx < vy => Term::lt(x, y),
                        (Ok(_), Ok(_)) => Term::lt(y, x),
                        _ => l.clone(),
                    }
                }
                _ => l.clone(),
            })
            .collect();
        let lits = if self.cfg.name_indices { name_indices(lits) } else { lits };
        let cube = Cube::new(lits);
        let (psi, sigma) = abs(&proj.kept, &cube.to_term())?;
        let cube = Cube::from_term(&psi).unwrap_or_else(|| Cube::new([psi]));
        Ok((cube, sigma))
    }

    /// Try moving a range bound of the quantified lemma `body` onto another
    /// state term. The rewrite must imply `body` and be inductive relative to
    /// `conj` (instances of the previous frame, and Tr) with its own
    /// instances assumed in the pre-state.
    fn substitute_bounds(&mut self, body: &Clause, conj: &[Term], sks: &BTreeSet<Term>) -> Result<Option<Clause>, Halt> {
        let terms: Vec<Term> =
            self.p.vars.iter().filter(|v| v.sort == Sort::Int).map(|v| Term::cnst(&UConst::state(&v.name, v.sort))).collect();
        let mut cands: Vec<Term> = sks.iter().cloned().collect();
        cands.extend(self.tr_index.iter().filter(|t| t.consts().iter().all(|c| !c.is_primed())).cloned());
        cands.extend(terms.iter().cloned());
        cands.sort();
        cands.dedup();
        let orig = skolemize(&body.to_term());
        let (solver, init_p, max) = (&mut self.solver, self.init_p.clone(), self.cfg.max_instances);
        let mut holds = |c: &Clause| -> Result<bool, SmtError> {
            let t = c.to_term();
            let implies = [("c".to_string(), skolemize(&t)), ("g".to_string(), Term::not(&orig))];
            if !solver.check(&implies)?.is_unsat() {
                return Ok(false);
            }
            let Ok(goal) = prime(&Term::not(&t)) else { return Ok(false) };
            let mut pre = conj.to_vec();
            pre.extend(ground_instances(std::slice::from_ref(c), &cands, max));
            let q = [("pre".to_string(), Term::or([Term::and(pre), init_p.clone()])), ("goal".to_string(), skolemize(&goal))];
            Ok(solver.check(&q)?.is_unsat())
        };
        Ok(substitute_bounds(body, &terms, &mut holds)?)
    }

    /// Learn a lemma blocking pob `id` at its frame.
    fn block(&mut self, id: usize) -> Result<usize, Halt> {
        let since = self.solver_ms();
        let i = self.pobs[id].frame;
        let a = self.f_of(i - 1);
        let b = self.pobs[id].goal.clone();
        let itp = match pitp(&mut self.solver, &a, &b) {
            Ok(x) => x,
            Err(ItpError::Satisfiable(_)) => return Err(Halt::Cex(self.n - i)),
            Err(ItpError::Unknown(r)) => return Err(Halt::Limit(format!("solver unknown: {r}"))),
            Err(ItpError::Smt(e)) => return Err(e.into()),
        };
        // with relative induction the candidate itself (one instance, at the
        // pob's skolems) is assumed in the pre-state
        let (qi, trans, init_p) = (self.instances(i - 1), self.p.trans.clone(), self.init_p.clone());
        let relative = self.cfg.relative_induction && i > 1;
        let premise = |lits: &[Term]| -> Term {
            match unprime(&Term::or(lits.iter().cloned())) {
                Ok(c) if relative => {
                    let mut conj = qi.clone();
                    conj.push(c);
                    conj.push(trans.clone());
                    Term::or([Term::and(conj), init_p.clone()])
                }
                _ => a.clone(),
            }
        };
        let mut clause = generalize_lemma_with(&mut self.solver, &itp.clause, &premise, self.cfg.generalize_passes)?;
        if self.cfg.strengthen_bounds {
            clause = strengthen_bounds_with(&mut self.solver, &clause, &premise, &self.consts)?;
        }
        let un = unprime(&clause.to_term())?;
        let (body_t, _) = abs(&skolems_of(&un), &un)?;
        let mut body = Clause::from_term(&body_t).unwrap_or_else(|| Clause::new([body_t]));
        let mut inst = self.pobs[id].inst.restrict(&body.free_vars());
        let mut origin = Origin::Interpolant;
        if self.cfg.qgen != QGenMode::Off {
            let qs = self.solver_ms();
            // Candidates are checked against F(Q_{i-1}) with the frame's
            // quantified lemmas also instantiated at the skolems a candidate
            // may introduce (sound: they are consequences of Q_{i-1}).
            let used = body.free_vars().into_iter().chain(inst.domain()).max().map_or(0, |m| m + 1);
            let sks: BTreeSet<Term> = (0..used + QGEN_SKOLEMS).map(Term::skolem).collect();
            let mut conj = self.instantiate_with(i - 1, sks.clone());
            conj.push(self.p.trans.clone());
            let aq = Term::or([Term::and(conj.clone()), self.init_p.clone()]);
            let opts = QGenOptions {
                all_candidates: self.cfg.qgen_all_candidates,
                passes: self.cfg.generalize_passes,
                consts: if self.cfg.strengthen_bounds { self.consts.clone() } else { BTreeSet::new() },
            };
            if let Some(g) = qgen(&mut self.solver, self.cfg.qgen, &body, &inst, &aq, &opts)? {
                let detail = format!("{:?} {} -> {} core {:?}", g.kind, body, g.body, g.core);
                body = g.body;
                inst = g.inst;
                origin = Origin::Qgen;
                if self.cfg.substitute_bounds && i > 1 {
                    if let Some(c) = self.substitute_bounds(&body, &conj, &sks)? {
                        self.event(Rule::QGen, i, Some(id), None, qs, Some(format!("bounds {body} -> {c}")));
                        inst = inst.restrict(&c.free_vars());
                        body = c;
                    }
                }
                self.qgen_accepted += 1;
                self.event(Rule::QGen, i, Some(id), None, qs, Some(detail));
            }
        }
        // add the lemma at the highest frame it already holds in
        let mut upto = i;
        while self.cfg.eager_push && upto < self.n && self.inductive_at(upto, &body)? {
            upto += 1;
        }
        debug!("lemma at {upto}: {body} {inst}");
        let lid = self.add_lemma(body, inst, origin, upto);
        self.event(Rule::NewLemma, i, Some(id), Some(lid), since, Some(self.pool[lid].body.to_string()));
        Ok(lid)
    }

    fn make_safe(&mut self, root: Cube) -> Result<(), Halt> {
        self.queue.clear();
        self.new_pob(root, Substitution::new(), self.n, None)?;
        while let Some(&(i, id)) = self.queue.first() {
            self.check_limits()?;
            if i == 0 {
                return Err(Halt::Cex(self.n));
            }
            self.audit_pob(id);
            let since = self.solver_ms();
            let mut q: Vec<(String, Term)> =
                self.instances(i - 1).into_iter().enumerate().map(|(k, t)| (format!("q{k}"), t)).collect();
            q.push(("tr".into(), self.p.trans.clone()));
            q.extend(self.pobs[id].goal.literals().iter().enumerate().map(|(k, t)| (format!("g{k}"), t.clone())));
            match self.solver.check(&q)? {
                SatResult::Sat(m) => {
                    let (cube, inst) = self.predecessor(id, &m)?;
                    let pid = self.new_pob(cube, inst, i - 1, Some(id))?;
                    self.event(Rule::Predecessor, i - 1, Some(pid), None, since, Some(self.pobs[pid].cube.to_string()));
                }
                SatResult::Unsat(_) => {
                    self.block(id)?;
                    self.queue.remove(&(i, id));
                    if self.cfg.push_pobs && i < self.n {
                        let pob = self.pobs[id].clone();
                        self.new_pob(pob.cube, pob.inst, i + 1, pob.parent)?;
                    }
                }
                SatResult::Unknown(r) => return Err(Halt::Limit(format!("solver unknown: {r}"))),
            }
            self.audit_frames();
        }
        Ok(())
    }

    /// Does `F(Q_i) /\ Tr` entail `body'`?
    fn inductive_at(&mut self, i: usize, body: &Clause) -> Result<bool, Halt> {
        self.check_limits()?;
        let goal = skolemize(&prime(&Term::not(&body.to_term()))?);
        let mut q: Vec<(String, Term)> =
            self.instantiate(i, &goal).into_iter().enumerate().map(|(k, t)| (format!("q{k}"), t)).collect();
        q.push(("tr".into(), self.p.trans.clone()));
        q.push(("goal".into(), goal));
        Ok(self.solver.check(&q)?.is_unsat())
    }

    /// Push lemmas forward; returns the frame index of a fixpoint, if any.
    fn push(&mut self) -> Result<Option<usize>, Halt> {
        for i in 1..self.n {
            let since = self.solver_ms();
            let mut tried: BTreeMap<Clause, bool> = BTreeMap::new();
            let ids: Vec<usize> = self.frames[i].iter().copied().collect();
            for id in ids {
                let body = self.pool[id].body.clone();
                if self.bodies(i + 1).contains(&body) && !tried.contains_key(&body) {
                    tried.insert(body.clone(), true);
                }
                let ok = match tried.get(&body) {
                    Some(ok) => *ok,
                    None => {
                        let ok = self.inductive_at(i, &body)?;
                        tried.insert(body.clone(), ok);
                        ok
                    }
                };
                if ok && !self.frames[i + 1].contains(&id) {
                    self.frames[i + 1].insert(id);
                    self.event(Rule::Push, i + 1, None, Some(id), since, None);
                }
            }
            self.audit_frames();
            if self.bodies(i) == self.bodies(i + 1) {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }

    fn main_loop(&mut self) -> Result<Verdict, Halt> {
        let since = self.solver_ms();
        match self.solver.check(&[("init".into(), self.p.init.clone()), ("bad".into(), self.p.bad.clone())])? {
            SatResult::Sat(_) => return Err(Halt::Cex(0)),
            SatResult::Unknown(r) => return Err(Halt::Limit(format!("solver unknown: {r}"))),
            SatResult::Unsat(_) => {}
        }
        let _ = since;
        loop {
            if self.n >= self.cfg.max_depth {
                return Err(Halt::Limit(format!("depth bound {} reached", self.cfg.max_depth)));
            }
            self.n += 1;
            self.frames.push(BTreeSet::new());
            let since = self.solver_ms();
            self.event(Rule::Unfold, self.n, None, None, since, None);
            info!("frame {}", self.n);
            for cube in self.bad_cubes.clone() {
                loop {
                    self.check_limits()?;
                    let since = self.solver_ms();
                    let mut q: Vec<(String, Term)> =
                        self.instances(self.n).into_iter().enumerate().map(|(k, t)| (format!("q{k}"), t)).collect();
                    q.extend(cube.literals().iter().enumerate().map(|(k, t)| (format!("b{k}"), t.clone())));
                    match self.solver.check(&q)? {
                        SatResult::Sat(_) => {
                            self.event(Rule::Candidate, self.n, Some(self.pobs.len()), None, since, Some(cube.to_string()));
                            self.make_safe(cube.clone())?;
                        }
                        SatResult::Unsat(_) => break,
                        SatResult::Unknown(r) => return Err(Halt::Limit(format!("solver unknown: {r}"))),
                    }
                }
            }
            if let Some(i) = self.push()? {
                let invariant: Vec<Clause> = self.bodies(i).into_iter().cloned().collect();
                let since = self.solver_ms();
                self.event(Rule::Safe, i, None, None, since, None);
                return Ok(Verdict::Safe { invariant, frame: i });
            }
        }
    }

    pub fn run(mut self) -> Result<Outcome, EngineError> {
        let verdict = match self.main_loop() {
            Ok(v) => v,
            Err(Halt::Error(e)) => return Err(e),
            Err(Halt::Limit(reason)) => {
                let since = self.solver_ms();
                self.event(Rule::ResourceLimit, self.n, None, None, since, Some(reason.clone()));
                Verdict::ResourceLimit { reason }
            }
            Err(Halt::Cex(k)) => {
                let since = self.solver_ms();
                let v = match unroll::reach_in(&mut self.solver, self.p, k, &self.p.bad)? {
                    unroll::Reach::Trace(trace) => Verdict::Cex { trace, length: k },
                    unroll::Reach::Unreachable => {
                        Verdict::ResourceLimit { reason: format!("counterexample of length {k} could not be reconstructed") }
                    }
                    unroll::Reach::Unknown(r) => Verdict::ResourceLimit { reason: format!("solver unknown: {r}") },
                };
                self.event(Rule::Cex, k, None, None, since, None);
                v
            }
        };
        self.audit.nonground_queries = self.solver.nonground;
        let inv = match &verdict {
            Verdict::Safe { invariant, .. } => Some(invariant.len()),
            _ => None,
        };
        let stats = Stats {
            depth: self.n,
            lemmas: self.pool.len(),
            inv,
            time_s: self.start.elapsed().as_secs_f64(),
            verdict: verdict.name().to_string(),
            pobs: self.pobs.len(),
            qgen_accepted: self.qgen_accepted,
            solver: self.solver.stats(),
        };
        let events = std::mem::take(&mut self.log).into_events();
        Ok(Outcome { verdict, stats, audit: self.audit, events, lemmas: self.pool, frames: self.frames })
    }
}

/// Run the engine on `p`.
pub fn solve(p: &SafetyProblem, cfg: &Config, solver: &mut dyn Solver) -> Result<Outcome, EngineError> {
    Engine::new(p, cfg.clone(), solver).run()
}
