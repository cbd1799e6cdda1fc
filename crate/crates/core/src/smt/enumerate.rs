//! Brute-force satisfiability over a bounded domain.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;
use std::time::Instant;

use super::{check_ground, ArrayValue, Model, SatResult, SmtError, Solver, SolverStats, Value};
use crate::term::{Sort, Term, UConst};

/// Finite interpretation domain: Int constants range over `ints`; arrays are
/// functions from `indices` into `values`, and read `default` elsewhere.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainBound {
    pub ints: RangeInclusive<i64>,
    pub indices: RangeInclusive<i64>,
    pub values: RangeInclusive<i64>,
    /// When set, the out-of-domain default is enumerated from `values` too.
    pub enumerate_default: bool,
    pub max_assignments: u128,
}

impl Default for DomainBound {
    fn default() -> Self {
        DomainBound { ints: -4..=4, indices: 0..=3, values: -4..=4, enumerate_default: false, max_assignments: 5_000_000 }
    }
}

impl DomainBound {
    pub fn ints(ints: RangeInclusive<i64>) -> Self {
        DomainBound { ints, ..DomainBound::default() }
    }
}

pub fn domain_values(sort: Sort, bound: &DomainBound) -> Vec<Value> {
    match sort {
        Sort::Bool => vec![Value::Bool(false), Value::Bool(true)],
        Sort::Int => bound.ints.clone().map(Value::Int).collect(),
        Sort::Array => {
            let defaults: Vec<i64> = if bound.enumerate_default { bound.values.clone().collect() } else { vec![0] };
            let mut out = Vec::new();
            for d in defaults {
                let mut arrays = vec![ArrayValue::constant(d)];
                for i in bound.indices.clone() {
                    arrays = arrays.iter().flat_map(|a| bound.values.clone().map(move |v| a.store(i, v))).collect();
                }
                out.extend(arrays.into_iter().map(Value::Array));
            }
            out
        }
    }
}

/// Iterator over all assignments of the given constants.
pub struct Assignments {
    consts: Vec<UConst>,
    domains: Vec<Vec<Value>>,
    counters: Vec<usize>,
    done: bool,
}

impl Assignments {
    pub fn new(consts: &BTreeSet<UConst>, bound: &DomainBound) -> Result<Self, SmtError> {
        let consts: Vec<UConst> = consts.iter().cloned().collect();
        let domains: Vec<Vec<Value>> = consts.iter().map(|c| domain_values(c.sort(), bound)).collect();
        let total = domains.iter().fold(1u128, |acc, d| acc.saturating_mul(d.len() as u128));
        if total > bound.max_assignments {
            return Err(SmtError::DomainTooLarge(total));
        }
        let done = domains.iter().any(Vec::is_empty);
        Ok(Assignments { counters: vec![0; consts.len()], consts, domains, done })
    }

    pub fn count(consts: &BTreeSet<UConst>, bound: &DomainBound) -> u128 {
        consts.iter().fold(1u128, |acc, c| acc.saturating_mul(domain_values(c.sort(), bound).len() as u128))
    }
}

impl Iterator for Assignments {
    type Item = Model;

    fn next(&mut self) -> Option<Model> {
        if self.done {
            return None;
        }
        let mut m = Model::new();
        for (k, c) in self.consts.iter().enumerate() {
            m.set(c.clone(), self.domains[k][self.counters[k]].clone());
        }
        // odometer step, last constant fastest
        let mut k = self.consts.len();
        loop {
            if k == 0 {
                self.done = true;
                break;
            }
            k -= 1;
            self.counters[k] += 1;
            if self.counters[k] < self.domains[k].len() {
                break;
            }
            self.counters[k] = 0;
        }
        Some(m)
    }
}

/// Reference backend: finds a model in the bounded domain or reports the
/// whole assertion set as the core. Only meaningful under bounded semantics.
pub struct EnumerationSolver {
    pub bound: DomainBound,
    stats: SolverStats,
}

impl EnumerationSolver {
    pub fn new(bound: DomainBound) -> Self {
        EnumerationSolver { bound, stats: SolverStats::default() }
    }
}

impl Solver for EnumerationSolver {
    fn check(&mut self, assertions: &[(String, Term)]) -> Result<SatResult, SmtError> {
        check_ground(assertions)?;
        let start = Instant::now();
        let consts: BTreeSet<UConst> = assertions.iter().flat_map(|(_, t)| t.consts()).collect();
        let result = match Assignments::new(&consts, &self.bound) {
            Err(e) => SatResult::Unknown(e.to_string()),
            Ok(mut it) => match it.find(|m| assertions.iter().all(|(_, t)| m.satisfies(t))) {
                Some(m) => SatResult::Sat(m),
                None => SatResult::Unsat(assertions.iter().map(|(l, _)| l.clone()).collect()),
            },
        };
        self.stats.record(&result, start.elapsed());
        Ok(result)
    }

    fn stats(&self) -> SolverStats {
        self.stats
    }

    fn name(&self) -> String {
        "enumeration".into()
    }
}
