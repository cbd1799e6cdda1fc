//! Satisfiability backends and models.

mod enumerate;
mod external;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::Duration;

use serde::Serialize;

use crate::term::{Op, Term, TermKind, UConst};

pub use enumerate::{domain_values, Assignments, DomainBound, EnumerationSolver};
pub use external::{find_solver, ExternalSolver, SOLVER_ENV};

#[derive(Debug, thiserror::Error)]
pub enum SmtError {
    #[error("query contains free variables: {0}")]
    NonGround(String),
    #[error("assertion is not Boolean: {0}")]
    NotBool(String),
    #[error("could not start solver `{cmd}`: {source}")]
    Spawn { cmd: String, source: std::io::Error },
    #[error("no SMT solver found; set {0} or put z3 on PATH")]
    NotFound(&'static str),
    #[error("domain too large for enumeration ({0} assignments)")]
    DomainTooLarge(u128),
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("no value for constant {0}")]
    Unassigned(String),
    #[error("free variable v!{0}")]
    FreeVariable(u32),
    #[error("integer overflow")]
    Overflow,
}

/// An array value: a default plus finitely many exceptions (never equal to the default).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ArrayValue {
    default: i64,
    entries: BTreeMap<i64, i64>,
}

impl ArrayValue {
    pub fn constant(default: i64) -> Self {
        ArrayValue { default, entries: BTreeMap::new() }
    }

    pub fn get(&self, i: i64) -> i64 {
        self.entries.get(&i).copied().unwrap_or(self.default)
    }

    pub fn store(&self, i: i64, v: i64) -> Self {
        let mut out = self.clone();
        if v == self.default {
            out.entries.remove(&i);
        } else {
            out.entries.insert(i, v);
        }
        out
    }

    pub fn default_value(&self) -> i64 {
        self.default
    }

    pub fn entries(&self) -> &BTreeMap<i64, i64> {
        &self.entries
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Array(ArrayValue),
}

impl Value {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    /// Scalar values as literal terms; arrays have no literal syntax here.
    pub fn to_term(&self) -> Option<Term> {
        match self {
            Value::Bool(b) => Some(Term::bool(*b)),
            Value::Int(n) => Some(Term::int(*n)),
            Value::Array(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(n) if *n < 0 => write!(f, "(- {})", n.unsigned_abs()),
            Value::Int(n) => write!(f, "{n}"),
            Value::Array(a) => {
                let mut s = format!("((as const (Array Int Int)) {})", Value::Int(a.default));
                for (i, v) in &a.entries {
                    s = format!("(store {s} {} {})", Value::Int(*i), Value::Int(*v));
                }
                f.write_str(&s)
            }
        }
    }
}

/// A total assignment to finitely many constants.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Model {
    values: BTreeMap<UConst, Value>,
}

fn ck(v: Option<i64>) -> Result<i64, EvalError> {
    v.ok_or(EvalError::Overflow)
}

impl Model {
    pub fn new() -> Self {
        Model::default()
    }

    pub fn set(&mut self, c: UConst, v: Value) {
        self.values.insert(c, v);
    }

    pub fn get(&self, c: &UConst) -> Option<&Value> {
        self.values.get(c)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&UConst, &Value)> {
        self.values.iter()
    }

    pub fn consts(&self) -> BTreeSet<UConst> {
        self.values.keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Keep only the given constants.
    pub fn restrict(&self, keep: &BTreeSet<UConst>) -> Model {
        Model { values: self.values.iter().filter(|(c, _)| keep.contains(c)).map(|(c, v)| (c.clone(), v.clone())).collect() }
    }

    /// Extend with the bindings of `other` not already present.
    pub fn extend(&mut self, other: &Model) {
        for (c, v) in &other.values {
            self.values.entry(c.clone()).or_insert_with(|| v.clone());
        }
    }

    pub fn eval(&self, t: &Term) -> Result<Value, EvalError> {
        Ok(match t.kind() {
            TermKind::Bool(b) => Value::Bool(*b),
            TermKind::Int(n) => Value::Int(*n),
            TermKind::Var(v) => return Err(EvalError::FreeVariable(*v)),
            TermKind::Const(c) => self.values.get(c).cloned().ok_or_else(|| EvalError::Unassigned(c.symbol()))?,
            TermKind::App(op, args) => match op {
                Op::Not => Value::Bool(!self.eval_bool(&args[0])?),
                Op::And => {
                    for a in args {
                        if !self.eval_bool(a)? {
                            return Ok(Value::Bool(false));
                        }
                    }
                    Value::Bool(true)
                }
                Op::Or => {
                    for a in args {
                        if self.eval_bool(a)? {
                            return Ok(Value::Bool(true));
                        }
                    }
                    Value::Bool(false)
                }
                Op::Eq => Value::Bool(self.eval(&args[0])? == self.eval(&args[1])?),
                Op::Le => Value::Bool(self.eval_int(&args[0])? <= self.eval_int(&args[1])?),
                Op::Lt => Value::Bool(self.eval_int(&args[0])? < self.eval_int(&args[1])?),
                Op::Add => {
                    let mut s = 0i64;
                    for a in args {
                        s = ck(s.checked_add(self.eval_int(a)?))?;
                    }
                    Value::Int(s)
                }
                Op::Mul => Value::Int(ck(self.eval_int(&args[0])?.checked_mul(self.eval_int(&args[1])?))?),
                Op::Mod => Value::Int(self.eval_int(&args[0])?.rem_euclid(self.eval_int(&args[1])?)),
                Op::Select => Value::Int(self.eval_array(&args[0])?.get(self.eval_int(&args[1])?)),
                Op::Store => Value::Array(self.eval_array(&args[0])?.store(self.eval_int(&args[1])?, self.eval_int(&args[2])?)),
                Op::Ite => {
                    if self.eval_bool(&args[0])? {
                        self.eval(&args[1])?
                    } else {
                        self.eval(&args[2])?
                    }
                }
            },
        })
    }

    pub fn eval_bool(&self, t: &Term) -> Result<bool, EvalError> {
        match self.eval(t)? {
            Value::Bool(b) => Ok(b),
            _ => unreachable!("well-sorted term"),
        }
    }

    pub fn eval_int(&self, t: &Term) -> Result<i64, EvalError> {
        match self.eval(t)? {
            Value::Int(n) => Ok(n),
            _ => unreachable!("well-sorted term"),
        }
    }

    pub fn eval_array(&self, t: &Term) -> Result<ArrayValue, EvalError> {
        match self.eval(t)? {
            Value::Array(a) => Ok(a),
            _ => unreachable!("well-sorted term"),
        }
    }

    /// `M |= t`, treating evaluation errors as failure.
    pub fn satisfies(&self, t: &Term) -> bool {
        self.eval_bool(t).unwrap_or(false)
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (c, v)) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c} = {v}")?;
        }
        f.write_str("}")
    }
}

#[derive(Clone, Debug)]
pub enum SatResult {
    Sat(Model),
    /// Labels of an unsatisfiable subset of the assertions.
    Unsat(Vec<String>),
    Unknown(String),
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, SatResult::Unsat(_))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct SolverStats {
    pub queries: u64,
    pub sat: u64,
    pub unsat: u64,
    pub unknown: u64,
    #[serde(with = "secs")]
    pub time: Duration,
}

mod secs {
    use serde::Serializer;
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }
}

impl SolverStats {
    pub(crate) fn record(&mut self, r: &SatResult, elapsed: Duration) {
        self.queries += 1;
        self.time += elapsed;
        match r {
            SatResult::Sat(_) => self.sat += 1,
            SatResult::Unsat(_) => self.unsat += 1,
            SatResult::Unknown(_) => self.unknown += 1,
        }
    }
}

pub trait Solver {
    /// Decide a conjunction of labelled, ground, quantifier-free assertions.
    fn check(&mut self, assertions: &[(String, Term)]) -> Result<SatResult, SmtError>;

    /// Best-effort check of `ground` together with the universal closures of
    /// `universal`. Sat results carry an empty model.
    fn check_quantified(&mut self, _ground: &[Term], _universal: &[Term]) -> SatResult {
        SatResult::Unknown("quantified queries unsupported by this backend".into())
    }

    fn stats(&self) -> SolverStats;

    fn name(&self) -> String;
}

/// Reject assertions that are open or not Boolean.
pub fn check_ground(assertions: &[(String, Term)]) -> Result<(), SmtError> {
    for (_, t) in assertions {
        if !t.is_ground() {
            return Err(SmtError::NonGround(t.to_string()));
        }
        if t.sort() != crate::term::Sort::Bool {
            return Err(SmtError::NotBool(t.to_string()));
        }
    }
    Ok(())
}

/// Label terms `a0, a1, ...` and check them.
pub fn check_terms(solver: &mut dyn Solver, terms: &[Term]) -> Result<SatResult, SmtError> {
    let labelled: Vec<(String, Term)> = terms.iter().enumerate().map(|(i, t)| (format!("a{i}"), t.clone())).collect();
    solver.check(&labelled)
}
