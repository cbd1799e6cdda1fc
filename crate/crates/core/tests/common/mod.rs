//! Helpers shared by the integration tests: term parsing, solver discovery,
//! an independent trace replayer, and random instance generators for the
//! projection and interpolation suites.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::Duration;

use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::RngExt;

use quic3::frontend::SafetyProblem;
use quic3::itp::pitp;
use quic3::mbp::pmbp;
use quic3::oracle::{check_itp_contract, check_mbp_contract, finite_range};
use quic3::smt::{check_terms, find_solver, Assignments, DomainBound, ExternalSolver, Model, SatResult, Solver};
use quic3::term::sexp::parse_one;
use quic3::term::{parse_term, rewrite, Clause, Cube, Op, Sort, Substitution, Term, UConst};

pub fn solver() -> Option<ExternalSolver> {
    let s = find_solver().ok().and_then(|p| ExternalSolver::new(p, Duration::from_secs(20)).ok());
    if s.is_none() {
        eprintln!("no SMT solver found; skipping");
    }
    s
}

pub fn find() -> Option<PathBuf> {
    find_solver().ok()
}

pub fn benchmarks() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("benchmarks")
}

/// Constant for a name: `A`/`B` prefixes are arrays, a trailing `!` primes.
pub fn cst(name: &str) -> UConst {
    let (base, primed) = match name.strip_suffix('!') {
        Some(b) => (b, true),
        None => (name, false),
    };
    let sort = if base.starts_with('A') || base.starts_with('B') { Sort::Array } else { Sort::Int };
    if primed {
        UConst::primed(base, sort)
    } else {
        UConst::state(base, sort)
    }
}

/// Parse a term; `v!k` are variables, `sk!k` skolems.
pub fn term(src: &str) -> Term {
    let sexp = parse_one(src).unwrap_or_else(|e| panic!("{src}: {e}"));
    parse_term(&sexp, &|s| {
        if s.starts_with("v!") {
            return None;
        }
        if let Some(k) = s.strip_prefix("sk!") {
            return k.parse().ok().map(|k| Term::cnst(&UConst::skolem(k)));
        }
        Some(Term::cnst(&cst(s)))
    })
    .unwrap_or_else(|e| panic!("{src}: {e}"))
}

pub fn consts(names: &[&str]) -> BTreeSet<UConst> {
    names.iter().map(|n| cst(n)).collect()
}

/// Replay a trace without the engine: every state is total over the state
/// variables, the first satisfies `init`, consecutive pairs satisfy `trans`
/// and the last satisfies `bad`.
pub fn replay(p: &SafetyProblem, trace: &[Model]) -> bool {
    let Some(last) = trace.last() else { return false };
    let total = |m: &Model| p.vars.iter().all(|v| m.get(&v.state()).is_some());
    if !trace.iter().all(total) || !trace[0].satisfies(&p.init) || !last.satisfies(&p.bad) {
        return false;
    }
    trace.windows(2).all(|w| {
        let mut m = w[0].clone();
        for v in &p.vars {
            m.set(v.state().to_primed(), w[1].get(&v.state()).cloned().unwrap());
        }
        m.satisfies(&p.trans)
    })
}

/// Clauses equal up to a renaming of their variables.
pub fn alpha_equivalent(a: &Clause, b: &Clause) -> bool {
    let (va, vb): (Vec<u32>, Vec<u32>) = (a.free_vars().into_iter().collect(), b.free_vars().into_iter().collect());
    if va.len() != vb.len() {
        return false;
    }
    let lits = |c: &Clause| -> BTreeSet<Term> { c.literals().iter().cloned().collect() };
    let target = lits(b);
    permutations(&vb).into_iter().any(|perm| {
        let s: Substitution = va.iter().zip(&perm).map(|(&x, &y)| (x, Term::var(y))).collect();
        lits(&a.map(|t| s.apply(t))) == target
    })
}

fn permutations(v: &[u32]) -> Vec<Vec<u32>> {
    if v.len() <= 1 {
        return vec![v.to_vec()];
    }
    let mut out = Vec::new();
    for k in 0..v.len() {
        let mut rest = v.to_vec();
        let x = rest.remove(k);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// random instances

fn coeff(rng: &mut StdRng) -> i64 {
    *[1, 1, 1, -1, 2, 3].choose(rng).unwrap()
}

fn lin(rng: &mut StdRng, vars: &[&str]) -> String {
    let n = rng.random_range(1..=2.min(vars.len()));
    let mut picked: Vec<&str> = vars.to_vec();
    let mut parts = Vec::new();
    for _ in 0..n {
        let k = rng.random_range(0..picked.len());
        let v = picked.remove(k);
        let c = coeff(rng);
        parts.push(if c == 1 { v.to_string() } else { format!("(* {c} {v})") });
    }
    if rng.random_bool(0.4) {
        parts.push(rng.random_range(-2..=2i64).to_string());
    }
    if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        format!("(+ {})", parts.join(" "))
    }
}

fn rel(rng: &mut StdRng, lhs: &str, rhs: &str) -> String {
    match rng.random_range(0..6) {
        0 => format!("(<= {lhs} {rhs})"),
        1 => format!("(< {lhs} {rhs})"),
        2 => format!("(= {lhs} {rhs})"),
        3 => format!("(>= {lhs} {rhs})"),
        4 => format!("(> {lhs} {rhs})"),
        _ => format!("(not (= {lhs} {rhs}))"),
    }
}

fn int_atom(rng: &mut StdRng, vars: &[&str]) -> String {
    let lhs = lin(rng, vars);
    let rhs = if rng.random_bool(0.5) { rng.random_range(-2..=2i64).to_string() } else { lin(rng, vars) };
    rel(rng, &lhs, &rhs)
}

fn conj(atoms: Vec<String>) -> String {
    if atoms.len() == 1 {
        atoms.into_iter().next().unwrap()
    } else {
        format!("(and {})", atoms.join(" "))
    }
}

/// A projection instance `(U, phi)`; `arrays` selects the array family.
pub fn gen_mbp(rng: &mut StdRng, arrays: bool) -> (BTreeSet<UConst>, Term) {
    loop {
        if let Some(r) = try_gen_mbp(rng, arrays) {
            return r;
        }
    }
}

fn try_gen_mbp(rng: &mut StdRng, arrays: bool) -> Option<(BTreeSet<UConst>, Term)> {
    let (u, src): (Vec<&str>, String) = if !arrays {
        let vars = ["x", "y", "z", "w"];
        let phi = match rng.random_range(0..10) {
            0..=5 => conj((0..rng.random_range(2..=4)).map(|_| int_atom(rng, &vars)).collect()),
            6..=8 => format!(
                "(or {} {})",
                conj((0..2).map(|_| int_atom(rng, &vars)).collect()),
                conj((0..2).map(|_| int_atom(rng, &vars)).collect())
            ),
            _ => format!("(and (< (ite (> x 0) y z) {}) {})", rng.random_range(-1..=2), int_atom(rng, &vars)),
        };
        let u = match rng.random_range(0..3) {
            0 => vec!["x"],
            1 => vec!["y"],
            _ => vec!["x", "y"],
        };
        (u, phi)
    } else {
        let ints = ["i", "j", "e"];
        let k = rng.random_range(-1..=1i64);
        let atom = |rng: &mut StdRng| {
            let a = ints.choose(rng).unwrap();
            let b = ints.choose(rng).unwrap();
            rel(rng, a, b)
        };
        match rng.random_range(0..6) {
            0 => {
                let r = rel(rng, "(select B j)", &k.to_string());
                let u = [vec!["B"], vec!["B", "i"], vec!["B", "e"]].choose(rng).unwrap().clone();
                (u, format!("(and (= B (store A i e)) {r} {})", atom(rng)))
            }
            1 => {
                let u = [vec!["A"], vec!["i"], vec!["A", "i"]].choose(rng).unwrap().clone();
                (u, format!("(and (= (select A i) e) {} {})", rel(rng, "i", "j"), atom(rng)))
            }
            2 => (vec!["B"], format!("(and (= B (store (store A i e) j {k})) (= (select B e) 1))")),
            3 => {
                let u = [vec!["A"], vec!["A", "j"]].choose(rng).unwrap().clone();
                (u, format!("(or (and (= (select A i) 1) (< i j)) (= (select A j) e))"))
            }
            4 => {
                let u = [vec!["i"], vec!["A"], vec!["e"]].choose(rng).unwrap().clone();
                (u, format!("(and (= (select (store A i e) j) {k}) {})", atom(rng)))
            }
            _ => {
                let u = [vec!["A!"], vec!["A!", "i"]].choose(rng).unwrap().clone();
                let r = rel(rng, "(select A! j)", "(select A j)");
                (u, format!("(and (= A! (store A i (+ (select A i) 1))) {r})"))
            }
        }
    };
    let phi = term(&src);
    let pc = phi.consts();
    let mut u: BTreeSet<UConst> = u.iter().map(|n| cst(n)).filter(|c| pc.contains(c)).collect();
    if u.is_empty() {
        // the chosen constants simplified away
        u.insert(pc.iter().next()?.clone());
    }
    Some((u, phi))
}

pub fn int_bound() -> (DomainBound, DomainBound) {
    (DomainBound::ints(-2..=2), DomainBound::ints(-16..=16))
}

/// Witnesses range wider than the models they extend: `A[i] + 1` or a
/// constant strictly between two others must stay representable.
pub fn array_bound() -> (DomainBound, DomainBound) {
    let outer = DomainBound { ints: -1..=1, indices: -1..=1, values: -1..=1, ..DomainBound::default() };
    let inner = DomainBound { ints: -3..=3, values: -3..=3, enumerate_default: true, ..outer.clone() };
    (outer, inner)
}

/// A uniformly chosen model of `phi` in the bounded domain.
pub fn model_of(rng: &mut StdRng, phi: &Term, bound: &DomainBound) -> Option<Model> {
    let models: Vec<Model> = Assignments::new(&phi.consts(), bound).ok()?.filter(|m| m.satisfies(phi)).collect();
    models.choose(rng).cloned()
}

fn smt_sort(s: Sort) -> &'static str {
    match s {
        Sort::Int => "Int",
        Sort::Bool => "Bool",
        Sort::Array => "(Array Int Int)",
    }
}

/// `exists B. B = t /\ rest` is `rest[B := t]` for a bound array `B`.
fn one_point(u: &BTreeSet<UConst>, phi: &Term) -> Term {
    let mut conj: Vec<Term> = if phi.op() == Some(Op::And) { phi.args().to_vec() } else { vec![phi.clone()] };
    loop {
        let def = conj.iter().enumerate().find_map(|(k, l)| {
            if l.op() != Some(Op::Eq) {
                return None;
            }
            let (a, b) = (&l.args()[0], &l.args()[1]);
            [(a, b), (b, a)].into_iter().find_map(|(x, t)| {
                let c = x.as_const()?;
                (c.sort() == Sort::Array && u.contains(c) && !t.contains_const(c)).then(|| (k, x.clone(), t.clone()))
            })
        });
        let Some((k, x, t)) = def else { break };
        conj.remove(k);
        conj = conj.iter().map(|l| rewrite(l, &mut |s| (*s == x).then(|| t.clone()))).collect();
    }
    Term::and(conj)
}

/// Rewrite `select(store(a, i, v), j)` into `ite(i = j, v, select(a, j))`,
/// which keeps quantified array queries decidable for the solver.
fn read_over_write(t: &Term) -> Term {
    let Some(op) = t.op() else { return t.clone() };
    let args: Vec<Term> = t.args().iter().map(read_over_write).collect();
    if op == Op::Select && args[0].op() == Some(Op::Store) {
        let s = args[0].args();
        let rest = read_over_write(&Term::select(&s[0], &args[1]));
        return Term::ite(&Term::eq(&s[1], &args[1]), &s[2], &rest);
    }
    Term::app(op, &args)
}

/// Decide `psi => exists U. phi` exactly with the external solver. Used when
/// the bounded check finds no witness, which may lie outside its domain.
pub fn exact_implies_exists(psi: &Term, u: &BTreeSet<UConst>, phi: &Term) -> Option<bool> {
    let phi = &read_over_write(&one_point(u, phi));
    let bound: Vec<&UConst> = u.iter().filter(|c| phi.consts().contains(c)).collect();
    let free: BTreeSet<UConst> = psi.consts().into_iter().chain(phi.consts()).filter(|c| !bound.contains(&c)).collect();
    let mut script = String::new();
    for c in &free {
        script.push_str(&format!("(declare-const {} {})\n", c.symbol(), smt_sort(c.sort())));
    }
    let binders: Vec<String> = bound.iter().map(|c| format!("({} {})", c.symbol(), smt_sort(c.sort()))).collect();
    let body = if binders.is_empty() { phi.to_string() } else { format!("(exists ({}) {phi})", binders.join(" ")) };
    script.push_str(&format!("(assert {psi})\n(assert (not {body}))\n(check-sat)\n"));
    let mut child = Command::new(find_solver().ok()?)
        .args(["-in", "-T:20"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .ok()?;
    child.stdin.take()?.write_all(script.as_bytes()).ok()?;
    let out = child.wait_with_output().ok()?;
    match String::from_utf8_lossy(&out.stdout).trim() {
        "unsat" => Some(true),
        "sat" => Some(false),
        _ => None,
    }
}

#[derive(Debug, Default)]
pub struct SuiteReport {
    pub checked: usize,
    pub passed: usize,
    pub trivial: usize,
    /// Conditions settled by the exact check after a bounded miss.
    pub exact: usize,
    pub failures: Vec<String>,
}

impl SuiteReport {
    pub fn ok(&self, min: usize) -> bool {
        self.checked >= min && self.passed == self.checked
    }
}

/// Projection contract on `n` random satisfiable triples.
pub fn mbp_suite(rng: &mut StdRng, n: usize) -> SuiteReport {
    let mut rep = SuiteReport::default();
    while rep.checked < n {
        let arrays = rep.checked % 2 == 1;
        let (u, phi) = gen_mbp(rng, arrays);
        let (outer, inner) = if arrays { array_bound() } else { int_bound() };
        let Some(m) = model_of(rng, &phi, &outer) else { continue };
        rep.checked += 1;
        let ok = match pmbp(&u, &phi, &m) {
            Ok(r) => match check_mbp_contract(&u, &phi, &m, &r, &outer, &inner) {
                Ok(c) if c.passed() => true,
                Ok(c) if c.conditions.iter().all(|(n, ok)| *ok || n == "implies-exists")
                    && exact_implies_exists(&r.cube.to_term(), &u, &phi) == Some(true) =>
                {
                    rep.exact += 1;
                    true
                }
                Ok(c) => {
                    rep.failures.push(format!("{phi} U={u:?} -> {} {:?}", r.cube, c.conditions));
                    false
                }
                Err(e) => {
                    rep.failures.push(format!("{phi}: oracle {e}"));
                    false
                }
            },
            Err(e) => {
                rep.failures.push(format!("{phi} U={u:?}: {e}"));
                false
            }
        };
        rep.passed += ok as usize;
    }
    rep
}

/// Finite range on `n` random `(U, phi)` pairs.
pub fn finite_range_suite(rng: &mut StdRng, n: usize) -> SuiteReport {
    let mut rep = SuiteReport::default();
    while rep.checked < n {
        let arrays = rep.checked % 3 == 2;
        let (u, phi) = gen_mbp(rng, arrays);
        let (outer, _) = if arrays { array_bound() } else { int_bound() };
        match finite_range(&u, &phi, &outer) {
            Ok(r) if r.models == 0 => continue,
            Ok(r) => {
                rep.checked += 1;
                if r.passed() {
                    rep.passed += 1;
                } else {
                    rep.failures.push(format!("{phi}: {r:?}"));
                }
            }
            Err(e) => {
                rep.checked += 1;
                rep.failures.push(format!("{phi}: {e}"));
            }
        }
    }
    rep
}

/// An interpolation pair `(A, B)`; not necessarily unsatisfiable.
pub fn gen_itp(rng: &mut StdRng) -> (Term, Cube) {
    let a_vars = ["x", "y", "s"];
    let b_vars = ["y", "s", "z"];
    match rng.random_range(0..10) {
        // B refutes one of A's shared atoms, padded with noise
        0..=4 => {
            let shared = int_atom(rng, &["y", "s"]);
            let mut a = vec![shared.clone()];
            a.extend((0..rng.random_range(0..=2)).map(|_| int_atom(rng, &a_vars)));
            let mut b = vec![term(&format!("(not {shared})"))];
            b.extend((0..rng.random_range(0..=3)).map(|_| term(&int_atom(rng, &b_vars))));
            (term(&conj(a)), Cube::new(b))
        }
        // a chain through B-local constants: often every literal is needed
        5..=6 => {
            let c = rng.random_range(0..=2i64);
            let a = term(&format!("(and (<= y s) {})", int_atom(rng, &a_vars)));
            let b = Cube::new([term(&format!("(< (+ s {c}) z)")), term(&format!("(<= z y)"))]);
            (a, b)
        }
        // arrays
        7..=8 => {
            let k = rng.random_range(-1..=1i64);
            let a = term(&format!("(and (= B (store A s {k})) (<= 0 s))"));
            let b = Cube::new([
                term("(= y s)"),
                term(&format!("(not (= (select B y) {k}))")),
                term(&int_atom(rng, &["y", "z"])),
            ]);
            (a, b)
        }
        _ => {
            let a = term(&conj((0..rng.random_range(1..=3)).map(|_| int_atom(rng, &a_vars)).collect()));
            let b = Cube::new((0..rng.random_range(1..=3)).map(|_| term(&int_atom(rng, &b_vars))));
            (a, b)
        }
    }
}

/// Interpolation contract on `n` random unsatisfiable pairs.
pub fn itp_suite(rng: &mut StdRng, solver: &mut dyn Solver, n: usize) -> SuiteReport {
    let mut rep = SuiteReport::default();
    let bound = DomainBound { ints: -2..=2, indices: -1..=1, values: -1..=1, ..DomainBound::default() };
    while rep.checked < n {
        let (a, b) = gen_itp(rng);
        let mut q = vec![a.clone()];
        q.extend(b.literals().iter().cloned());
        if !matches!(check_terms(solver, &q), Ok(SatResult::Unsat(_))) {
            continue;
        }
        rep.checked += 1;
        match pitp(solver, &a, &b) {
            Ok(r) => {
                rep.trivial += r.trivial as usize;
                match check_itp_contract(&a, &b, &r, &bound) {
                    Ok(c) if c.passed() => rep.passed += 1,
                    Ok(c) => rep.failures.push(format!("{a} / {b} -> {} {:?}", r.clause, c.conditions)),
                    Err(e) => rep.failures.push(format!("{a} / {b}: oracle {e}")),
                }
            }
            Err(e) => rep.failures.push(format!("{a} / {b}: {e}")),
        }
    }
    rep
}
