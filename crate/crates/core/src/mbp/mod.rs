//! Partial model-based projection.
//!
//! `pmbp(U, phi, M)` returns a ground cube `psi` with `M |= psi` and
//! `psi => exists (U \ W). phi`, where `W` collects the constants that could
//! not be eliminated (integers still used as array indices, plus fresh
//! witnesses standing for reads of eliminated arrays).

use std::collections::BTreeSet;

use log::trace;
use num_integer::Integer;

use crate::smt::{EvalError, Model, Value};
use crate::term::{rewrite, Cube, LinExpr, Op, Sort, Term, TermKind, UConst};

#[derive(Debug, thiserror::Error)]
pub enum MbpError {
    #[error("the model does not satisfy the formula")]
    NotAModel,
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("cannot eliminate array {0}: {1}")]
    Unsupported(String, String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Projection {
    pub cube: Cube,
    /// Constants of `U` (and fresh witnesses) that remain in the cube.
    pub kept: BTreeSet<UConst>,
    /// Values of the fresh witnesses, extending the input model.
    pub witnesses: Model,
}

impl Projection {
    /// The input model extended with witness values.
    pub fn model(&self, m: &Model) -> Model {
        let mut out = m.clone();
        out.extend(&self.witnesses);
        out
    }
}

/// Prefix of witness constants introduced for eliminated array reads.
pub const WITNESS_PREFIX: &str = "w!";

pub fn pmbp(u: &BTreeSet<UConst>, phi: &Term, m: &Model) -> Result<Projection, MbpError> {
    if !m.eval_bool(phi)? {
        return Err(MbpError::NotAModel);
    }
    let mut st = State { lits: Vec::new(), model: m.clone(), witnesses: Model::new(), next_witness: 0 };
    st.implicant(phi)?;
    st.lits.retain(|l| !matches!(l.atom().as_const(), Some(c) if c.sort() == Sort::Bool && u.contains(c)));
    st.resolve_row()?;

    let mut elim: Vec<UConst> = Vec::new();
    for a in u.iter().filter(|c| c.sort() == Sort::Array) {
        elim.extend(st.eliminate_array(a)?);
    }
    elim.extend(u.iter().filter(|c| c.sort() == Sort::Int).cloned());
    elim.sort();
    elim.dedup();

    let mut pending = elim;
    loop {
        let mut progress = false;
        let mut still = Vec::new();
        for c in pending {
            let t = Term::cnst(&c);
            if !st.lits.iter().any(|l| l.contains(&t)) {
                progress = true;
                continue;
            }
            if st.eliminate_int(&t)? {
                progress = true;
            } else {
                still.push(c);
            }
        }
        pending = still;
        if !progress || pending.is_empty() {
            break;
        }
    }
    let kept: BTreeSet<UConst> = pending.into_iter().collect();
    let cube = Cube::new(st.lits.iter().cloned());
    let witnesses = st.witnesses.restrict(&kept);
    trace!("pmbp: {} literals, kept {:?}", cube.len(), kept);
    Ok(Projection { cube, kept, witnesses })
}

struct State {
    lits: Vec<Term>,
    /// Input model plus witness values.
    model: Model,
    witnesses: Model,
    next_witness: u32,
}

fn first_ite(t: &Term) -> Option<Term> {
    let mut found = None;
    t.visit(&mut |s| {
        if found.is_none() && s.op() == Some(Op::Ite) {
            found = Some(s.clone());
        }
    });
    found
}

fn replace(t: &Term, from: &Term, to: &Term) -> Term {
    rewrite(t, &mut |s| if s == from { Some(to.clone()) } else { None })
}

#[derive(Clone, Debug)]
enum Con {
    /// `e <= 0`
    Le(LinExpr),
    /// `e = 0`
    Eq(LinExpr),
    /// `k | e`
    Div(i64, LinExpr),
}

impl Con {
    fn expr(&self) -> &LinExpr {
        match self {
            Con::Le(e) | Con::Eq(e) | Con::Div(_, e) => e,
        }
    }

    fn map(&self, f: impl Fn(&LinExpr) -> LinExpr) -> Con {
        match self {
            Con::Le(e) => Con::Le(f(e)),
            Con::Eq(e) => Con::Eq(f(e)),
            Con::Div(k, e) => Con::Div(*k, f(e)),
        }
    }

    fn to_term(&self) -> Term {
        match self {
            Con::Le(e) => Term::le_zero(e.clone()),
            Con::Eq(e) => Term::eq_zero(e.clone()),
            Con::Div(k, e) => Term::divisible(*k, e),
        }
    }
}

/// `mod(f, k)` leaf of a divisibility atom `mod(f, k) = r`, if the literal has that shape.
fn mod_atom(e: &LinExpr) -> Option<(LinExpr, i64, i64)> {
    let mut terms = e.terms();
    let (leaf, c) = terms.next()?;
    if terms.next().is_some() || c.abs() != 1 || leaf.op() != Some(Op::Mod) {
        return None;
    }
    let f = LinExpr::from_term(&leaf.args()[0]);
    let k = leaf.args()[1].as_int()?;
    // c * m + k0 = 0  =>  m = -c * k0
    Some((f, k, -c * e.get_constant()))
}

fn int_sides(atom: &Term) -> Option<LinExpr> {
    match atom.kind() {
        TermKind::App(Op::Le | Op::Lt | Op::Eq, args) if args[0].sort() == Sort::Int => {
            let e = LinExpr::from_term(&args[0]).sub(&LinExpr::from_term(&args[1]));
            Some(if atom.op() == Some(Op::Lt) { e.add_constant(1) } else { e })
        }
        _ => None,
    }
}

impl State {
    fn eval_int(&self, t: &Term) -> Result<i64, MbpError> {
        Ok(self.model.eval_int(t)?)
    }

    fn eval_lin(&self, e: &LinExpr) -> Result<i64, MbpError> {
        self.eval_int(&e.to_term())
    }

    fn implicant(&mut self, t: &Term) -> Result<(), MbpError> {
        match t.kind() {
            TermKind::Bool(true) => Ok(()),
            TermKind::App(Op::And, args) => {
                for a in args {
                    self.implicant(a)?;
                }
                Ok(())
            }
            TermKind::App(Op::Or, args) => {
                for a in args {
                    if self.model.eval_bool(a)? {
                        return self.implicant(a);
                    }
                }
                Err(MbpError::NotAModel)
            }
            _ => {
                if let Some(ite) = first_ite(t) {
                    let args = ite.args();
                    let (cond, branch) = if self.model.eval_bool(&args[0])? {
                        (args[0].clone(), args[1].clone())
                    } else {
                        (Term::not(&args[0]), args[2].clone())
                    };
                    self.implicant(&cond)?;
                    return self.implicant(&replace(t, &ite, &branch));
                }
                if !self.model.eval_bool(t)? {
                    return Err(MbpError::NotAModel);
                }
                self.lits.push(t.clone());
                Ok(())
            }
        }
    }

    fn push_lit(&mut self, l: Term) {
        if !l.is_true() {
            debug_assert!(self.model.satisfies(&l), "model violates {l}");
            self.lits.push(l);
        }
    }

    fn rewrite_all(&mut self, from: &Term, to: &Term) {
        let old = std::mem::take(&mut self.lits);
        for l in old {
            let n = replace(&l, from, to);
            self.push_lit(n);
        }
    }

    /// Resolve every read-over-write by comparing the indices in the model.
    fn resolve_row(&mut self) -> Result<(), MbpError> {
        loop {
            let mut target = None;
            for l in &self.lits {
                l.visit(&mut |s| {
                    if target.is_none() && s.op() == Some(Op::Select) && s.args()[0].op() == Some(Op::Store) {
                        target = Some(s.clone());
                    }
                });
                if target.is_some() {
                    break;
                }
            }
            let Some(sel) = target else { return Ok(()) };
            let store = &sel.args()[0];
            let (base, i, v) = (&store.args()[0], &store.args()[1], &store.args()[2]);
            let j = &sel.args()[1];
            if self.eval_int(i)? == self.eval_int(j)? {
                self.rewrite_all(&sel, v);
                self.push_lit(Term::eq(i, j));
            } else {
                self.rewrite_all(&sel, &Term::select(base, j));
                self.push_lit(Term::ne(i, j));
            }
        }
    }

    fn fresh_witness(&mut self, value: i64) -> UConst {
        let c = UConst::aux(&format!("{WITNESS_PREFIX}{}", self.next_witness), Sort::Int);
        self.next_witness += 1;
        self.model.set(c.clone(), Value::Int(value));
        self.witnesses.set(c.clone(), Value::Int(value));
        c
    }

    /// Eliminate array `a`; returns the witnesses introduced for its reads.
    fn eliminate_array(&mut self, a: &UConst) -> Result<Vec<UConst>, MbpError> {
        let at = Term::cnst(a);
        let unsupported = |msg: &str| MbpError::Unsupported(a.symbol(), msg.to_string());
        loop {
            // a = t
            let def = self.lits.iter().enumerate().find_map(|(k, l)| match l.kind() {
                TermKind::App(Op::Eq, args) if args[0].sort() == Sort::Array => {
                    if args[0] == at && !args[1].contains(&at) {
                        Some((k, args[1].clone()))
                    } else if args[1] == at && !args[0].contains(&at) {
                        Some((k, args[0].clone()))
                    } else {
                        None
                    }
                }
                _ => None,
            });
            if let Some((k, t)) = def {
                self.lits.remove(k);
                self.rewrite_all(&at, &t);
                self.resolve_row()?;
                continue;
            }
            // b = store(a, i, v)
            let upd = self.lits.iter().enumerate().find_map(|(k, l)| match l.kind() {
                TermKind::App(Op::Eq, args) if args[0].sort() == Sort::Array => {
                    let pick = |s: &Term, other: &Term| {
                        (s.op() == Some(Op::Store) && s.args()[0] == at && !s.args()[1].contains(&at) && !s.args()[2].contains(&at) && !other.contains(&at))
                            .then(|| (k, other.clone(), s.args()[1].clone(), s.args()[2].clone()))
                    };
                    pick(&args[0], &args[1]).or_else(|| pick(&args[1], &args[0]))
                }
                _ => None,
            });
            if let Some((k, b, i, v)) = upd {
                self.lits.remove(k);
                self.push_lit(Term::eq(&Term::select(&b, &i), &v));
                let mi = self.eval_int(&i)?;
                for sel in self.reads_of(&at) {
                    let t = sel.args()[1].clone();
                    if self.eval_int(&t)? == mi {
                        self.push_lit(Term::eq(&t, &i));
                    } else {
                        self.rewrite_all(&sel, &Term::select(&b, &t));
                        self.push_lit(Term::ne(&t, &i));
                    }
                }
                self.resolve_row()?;
                continue;
            }
            break;
        }
        // disequalities: a differs somewhere no read can see
        let mut kept = Vec::new();
        for l in std::mem::take(&mut self.lits) {
            if l.op() == Some(Op::Not) && l.atom().op() == Some(Op::Eq) && l.contains(&at) {
                let args = l.atom().args();
                let base = |s: &Term| {
                    let mut s = s.clone();
                    while s.op() == Some(Op::Store) {
                        if s.args()[1].contains(&at) || s.args()[2].contains(&at) {
                            return false;
                        }
                        s = s.args()[0].clone();
                    }
                    s == at
                };
                if (base(&args[0]) && !args[1].contains(&at)) || (base(&args[1]) && !args[0].contains(&at)) {
                    continue;
                }
                return Err(unsupported("disequality mentions the array on both sides"));
            }
            kept.push(l);
        }
        self.lits = kept;
        // Ackermannize the remaining reads
        let reads = self.reads_of(&at);
        for l in &self.lits {
            let stray = rewrite(l, &mut |s| (s.op() == Some(Op::Select) && s.args()[0] == at).then(|| Term::int(0)));
            if stray.contains(&at) {
                return Err(unsupported(&format!("non-read occurrence in {l}")));
            }
        }
        let mut groups: Vec<(i64, Term, Vec<Term>)> = Vec::new();
        for sel in reads {
            let idx = sel.args()[1].clone();
            if idx.contains(&at) {
                return Err(unsupported("nested read"));
            }
            let val = self.eval_int(&idx)?;
            match groups.iter_mut().find(|g| g.0 == val) {
                Some(g) => g.2.push(sel),
                None => groups.push((val, idx, vec![sel])),
            }
        }
        let mut witnesses = Vec::new();
        for (gi, (_, rep, sels)) in groups.clone().into_iter().enumerate() {
            let value = self.eval_int(&sels[0])?;
            let w = self.fresh_witness(value);
            let wt = Term::cnst(&w);
            for sel in &sels {
                self.push_lit(Term::eq(&sel.args()[1], &rep));
                self.rewrite_all(sel, &wt);
            }
            for (_, other, _) in groups.iter().skip(gi + 1) {
                self.push_lit(Term::ne(&rep, other));
            }
            witnesses.push(w);
        }
        Ok(witnesses)
    }

    /// Distinct `select(a, _)` subterms, in term order.
    fn reads_of(&self, at: &Term) -> Vec<Term> {
        let mut out = BTreeSet::new();
        for l in &self.lits {
            l.visit(&mut |s| {
                if s.op() == Some(Op::Select) && &s.args()[0] == at {
                    out.insert(s.clone());
                }
            });
        }
        out.into_iter().collect()
    }

    /// Whether `u` occurs in `l` only where linear projection can handle it.
    fn linear_in(l: &Term, u: &Term) -> bool {
        if !l.contains(u) {
            return true;
        }
        let Some(e) = int_sides(l.atom()) else { return false };
        let leaves_ok = |e: &LinExpr| e.terms().all(|(leaf, _)| leaf == u || !leaf.contains(u));
        if let Some((f, _, _)) = mod_atom(&e) {
            if l.atom().op() == Some(Op::Eq) {
                return leaves_ok(&f);
            }
        }
        if l.op() == Some(Op::Not) && l.atom().op() != Some(Op::Eq) {
            return false;
        }
        leaves_ok(&e)
    }

    /// Eliminate an Int constant; false when it occurs non-linearly and has no definition.
    fn eliminate_int(&mut self, u: &Term) -> Result<bool, MbpError> {
        // unit-coefficient definition u = t
        for (k, l) in self.lits.iter().enumerate() {
            if l.op() != Some(Op::Eq) || !Self::linear_in(l, u) {
                continue;
            }
            let Some(mut e) = int_sides(l) else { continue };
            if mod_atom(&e).is_some() {
                continue;
            }
            let c = e.take(u);
            if c.abs() == 1 {
                // c*u + e = 0  =>  u = -c*e
                let t = e.scale(-c).to_term();
                self.lits.remove(k);
                self.rewrite_all(u, &t);
                return Ok(true);
            }
        }
        if !self.lits.iter().all(|l| Self::linear_in(l, u)) {
            return Ok(false);
        }
        self.project_lia(u)?;
        Ok(true)
    }

    fn project_lia(&mut self, u: &Term) -> Result<(), MbpError> {
        let mut cons: Vec<Con> = Vec::new();
        let mut rest: Vec<Term> = Vec::new();
        for l in std::mem::take(&mut self.lits) {
            if !l.contains(u) {
                rest.push(l);
                continue;
            }
            let e = int_sides(l.atom()).expect("linear literal");
            let negated = l.op() == Some(Op::Not);
            match (mod_atom(&e), l.atom().op()) {
                (Some((f, k, r)), Some(Op::Eq)) if f.coeff(u) != 0 => {
                    let r = if negated { self.eval_lin(&f)?.rem_euclid(k) } else { r };
                    cons.push(Con::Div(k, f.add_constant(-r)));
                }
                (_, Some(Op::Eq)) if negated => {
                    // e != 0 becomes the strict inequality true in the model
                    if self.eval_lin(&e)? < 0 {
                        cons.push(Con::Le(e.add_constant(1)));
                    } else {
                        cons.push(Con::Le(e.scale(-1).add_constant(1)));
                    }
                }
                (_, Some(Op::Eq)) => cons.push(Con::Eq(e)),
                _ => cons.push(Con::Le(e)),
            }
        }
        let mu = self.eval_int(u)?;
        // scale so every coefficient of u is +-l
        let l = cons.iter().map(|c| c.expr().coeff(u).abs()).filter(|c| *c != 0).fold(1i64, |a, c| a.lcm(&c));
        let mut norm: Vec<(i64, Con)> = Vec::new(); // (sign of u*, constraint without u)
        for c in cons {
            let cu = c.expr().coeff(u);
            if cu == 0 {
                norm.push((0, c));
                continue;
            }
            let m = l / cu.abs();
            let scaled = match &c {
                Con::Div(k, e) => Con::Div(k * m, e.scale(m)),
                _ => c.map(|e| e.scale(m)),
            };
            let scaled = scaled.map(|e| {
                let mut e = e.clone();
                e.take(u);
                e
            });
            norm.push((cu.signum(), scaled));
        }
        if l > 1 {
            norm.push((1, Con::Div(l, LinExpr::default())));
        }
        let mu_star = l * mu;
        let value = |st: &State, e: &LinExpr| st.eval_lin(e);
        // u* := expr in every constraint
        let substitute = |norm: &[(i64, Con)], expr: &LinExpr| -> Vec<Con> {
            norm.iter().map(|(s, c)| if *s == 0 { c.clone() } else { c.map(|e| e.add(&expr.scale(*s))) }).collect()
        };
        let result: Vec<Con> = if let Some(pos) = norm.iter().position(|(s, c)| *s != 0 && matches!(c, Con::Eq(_))) {
            let (s, c) = norm.remove(pos);
            // s*u* + r = 0  =>  u* = -s*r
            let def = c.expr().scale(-s);
            substitute(&norm, &def)
        } else {
            let delta = norm.iter().filter(|(s, c)| *s != 0 && matches!(c, Con::Div(..))).fold(1i64, |a, (_, c)| match c {
                Con::Div(k, _) => a.lcm(k),
                _ => a,
            });
            // lower bound: -u* + r <= 0  <=>  r <= u*;  upper: u* + r <= 0  <=>  u* <= -r
            let mut lowers = Vec::new();
            let mut uppers = Vec::new();
            for (s, c) in &norm {
                if let Con::Le(e) = c {
                    match s {
                        -1 => lowers.push((value(self, e)?, e.clone())),
                        1 => uppers.push((value(self, &e.scale(-1))?, e.scale(-1))),
                        _ => {}
                    }
                }
            }
            let def = if !lowers.is_empty() {
                lowers.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.to_term().cmp(&b.1.to_term())));
                let (ml, lb) = &lowers[0];
                lb.add_constant((mu_star - ml).rem_euclid(delta))
            } else if !uppers.is_empty() {
                uppers.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.to_term().cmp(&b.1.to_term())));
                let (mh, ub) = &uppers[0];
                ub.add_constant(-(mh - mu_star).rem_euclid(delta))
            } else {
                LinExpr::constant(mu_star.rem_euclid(delta))
            };
            substitute(&norm, &def)
        };
        self.lits = rest;
        for c in result {
            let t = c.to_term();
            if t.is_false() || !self.model.satisfies(&t) {
                unreachable!("projection produced a literal false in the model: {t}");
            }
            self.push_lit(t);
        }
        Ok(())
    }
}
