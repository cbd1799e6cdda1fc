//! Rendering verdicts: human-readable text, JSON, or an SMT-LIB2 invariant.

use std::fmt::Write;

use serde::Serialize;
use serde_json::{json, Map, Value as Json};

use super::SafetyProblem;
use crate::engine::{Stats, Verdict};
use crate::term::Clause;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Human,
    Json,
    Smt2Invariant,
}

/// The columns reported per run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StatsRecord {
    pub depth: usize,
    pub lemmas: usize,
    pub inv: Option<usize>,
    pub time_s: f64,
    pub verdict: String,
}

impl From<&Stats> for StatsRecord {
    fn from(s: &Stats) -> Self {
        StatsRecord { depth: s.depth, lemmas: s.lemmas, inv: s.inv, time_s: s.time_s, verdict: s.verdict.clone() }
    }
}

/// `(forall ((v!0 Int) ...) clause)`, or the clause itself when closed.
pub fn closed_clause(c: &Clause) -> String {
    let vars = c.free_vars();
    if vars.is_empty() {
        return c.to_term().to_string();
    }
    let binders: Vec<String> = vars.iter().map(|v| format!("(v!{v} Int)")).collect();
    format!("(forall ({}) {})", binders.join(" "), c.to_term())
}

/// Declarations of the state variables followed by one assertion per clause.
pub fn invariant_smt2(p: &SafetyProblem, inv: &[Clause]) -> String {
    let mut s = String::new();
    for v in &p.vars {
        let _ = writeln!(s, "(declare-fun {} () {})", v.name, v.sort);
    }
    for c in inv {
        let _ = writeln!(s, "(assert {})", closed_clause(c));
    }
    s
}

fn verdict_word(v: &Verdict) -> &'static str {
    match v {
        Verdict::Safe { .. } => "safe",
        Verdict::Cex { .. } => "unsafe",
        Verdict::ResourceLimit { .. } => "unknown",
    }
}

pub fn emit_result(p: &SafetyProblem, v: &Verdict, stats: &Stats, format: Format) -> String {
    match format {
        Format::Smt2Invariant => match v {
            Verdict::Safe { invariant, .. } => invariant_smt2(p, invariant),
            _ => String::new(),
        },
        Format::Human => {
            let mut s = format!("{}\n", verdict_word(v));
            match v {
                Verdict::Safe { invariant, frame } => {
                    let _ = writeln!(s, "; inductive invariant (frame {frame})");
                    s.push_str(&invariant_smt2(p, invariant));
                }
                Verdict::Cex { trace, length } => {
                    let _ = writeln!(s, "; counterexample of length {length}");
                    for (k, state) in trace.iter().enumerate() {
                        let _ = writeln!(s, "state {k}: {state}");
                    }
                }
                Verdict::ResourceLimit { reason } => {
                    let _ = writeln!(s, "; {reason}");
                }
            }
            let inv = stats.inv.map(|n| n.to_string()).unwrap_or_else(|| "-".into());
            let _ = writeln!(s, "; depth {} lemmas {} inv {}", stats.depth, stats.lemmas, inv);
            s
        }
        Format::Json => {
            let mut obj = Map::new();
            obj.insert("result".into(), json!(verdict_word(v)));
            obj.insert("stats".into(), serde_json::to_value(StatsRecord::from(stats)).unwrap_or(Json::Null));
            match v {
                Verdict::Safe { invariant, frame } => {
                    obj.insert("frame".into(), json!(frame));
                    obj.insert("invariant".into(), json!(invariant.iter().map(closed_clause).collect::<Vec<_>>()));
                }
                Verdict::Cex { trace, length } => {
                    obj.insert("length".into(), json!(length));
                    let states: Vec<Json> = trace
                        .iter()
                        .map(|m| {
                            let mut st = Map::new();
                            for (c, val) in m.iter() {
                                st.insert(c.symbol(), serde_json::to_value(val).unwrap_or(Json::Null));
                            }
                            Json::Object(st)
                        })
                        .collect();
                    obj.insert("trace".into(), Json::Array(states));
                }
                Verdict::ResourceLimit { reason } => {
                    obj.insert("reason".into(), json!(reason));
                }
            }
            Json::Object(obj).to_string()
        }
    }
}
