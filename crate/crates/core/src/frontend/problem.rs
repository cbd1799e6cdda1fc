//! Transition-system safety problems and their textual format:
//!
//! ```text
//! (declare-state i Int)
//! (declare-state A (Array Int Int))
//! (init (= i 0))
//! (trans (and (= i! (+ i 1)) (= A! (store A i 0))))
//! (bad (< i 0))
//! ```
//!
//! Next-state copies are written with a trailing `!`.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write;

use crate::term::sexp::{parse_all, Pos};
use crate::term::{parse_sort, parse_term, ParseError, Sort, Term, UConst};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ProblemError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{0}: {1}")]
    Invalid(Pos, String),
    #[error("missing ({0} ...) section")]
    Missing(&'static str),
    #[error("{0} may only mention {1}")]
    WrongConstants(&'static str, &'static str),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateVar {
    pub name: String,
    pub sort: Sort,
}

impl StateVar {
    pub fn state(&self) -> UConst {
        UConst::state(&self.name, self.sort)
    }

    pub fn primed(&self) -> UConst {
        UConst::primed(&self.name, self.sort)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SafetyProblem {
    pub vars: Vec<StateVar>,
    pub init: Term,
    pub trans: Term,
    pub bad: Term,
}

const RESERVED: &[&str] = &[
    "true", "false", "and", "or", "not", "=>", "xor", "ite", "=", "distinct", "<", "<=", ">", ">=", "+", "-", "*", "mod",
    "select", "store", "let", "forall", "exists", "Int", "Bool", "Array",
];

/// Whether `name` can be used for a state variable.
pub fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && !RESERVED.contains(&name)
        && !name.starts_with(|c: char| c.is_ascii_digit())
        && name.chars().all(|c| c.is_ascii_alphanumeric() || "~$%^&*_-+=<>.?/".contains(c))
}

impl SafetyProblem {
    pub fn new(vars: Vec<StateVar>, init: Term, trans: Term, bad: Term) -> Result<Self, ProblemError> {
        let p = SafetyProblem { vars, init, trans, bad };
        p.validate()?;
        Ok(p)
    }

    pub fn state_consts(&self) -> BTreeSet<UConst> {
        self.vars.iter().map(StateVar::state).collect()
    }

    pub fn primed_consts(&self) -> BTreeSet<UConst> {
        self.vars.iter().map(StateVar::primed).collect()
    }

    fn validate(&self) -> Result<(), ProblemError> {
        let x = self.state_consts();
        let xp = self.primed_consts();
        for (name, t) in [("init", &self.init), ("trans", &self.trans), ("bad", &self.bad)] {
            if t.sort() != Sort::Bool {
                return Err(ProblemError::Invalid(Pos::default(), format!("{name} is not Boolean")));
            }
            if !t.is_ground() {
                return Err(ProblemError::Invalid(Pos::default(), format!("{name} has free variables")));
            }
        }
        if !self.init.consts().is_subset(&x) {
            return Err(ProblemError::WrongConstants("init", "state variables"));
        }
        if !self.bad.consts().is_subset(&x) {
            return Err(ProblemError::WrongConstants("bad", "state variables"));
        }
        if !self.trans.consts().iter().all(|c| x.contains(c) || xp.contains(c)) {
            return Err(ProblemError::WrongConstants("trans", "state variables and their primed copies"));
        }
        Ok(())
    }

    pub fn parse(src: &str) -> Result<Self, ProblemError> {
        let items = parse_all(src).map_err(ParseError::from)?;
        let mut vars: Vec<StateVar> = Vec::new();
        let mut by_name: HashMap<String, Sort> = HashMap::new();
        let mut sections: HashMap<&'static str, Term> = HashMap::new();
        for item in &items {
            let Some(list) = item.list() else {
                return Err(ProblemError::Invalid(item.pos(), "expected a command".into()));
            };
            match item.head() {
                Some("declare-state") => {
                    let [_, name, sort] = list else {
                        return Err(ProblemError::Invalid(item.pos(), "usage: (declare-state name sort)".into()));
                    };
                    let Some(n) = name.atom().filter(|n| valid_name(n)) else {
                        return Err(ProblemError::Invalid(name.pos(), format!("invalid state variable name {name}")));
                    };
                    if by_name.contains_key(n) {
                        return Err(ProblemError::Invalid(name.pos(), format!("duplicate state variable {n}")));
                    }
                    let sort = parse_sort(sort)?;
                    by_name.insert(n.to_string(), sort);
                    vars.push(StateVar { name: n.to_string(), sort });
                }
                Some(cmd @ ("init" | "trans" | "bad")) => {
                    let [_, body] = list else {
                        return Err(ProblemError::Invalid(item.pos(), format!("usage: ({cmd} term)")));
                    };
                    let key: &'static str = match cmd {
                        "init" => "init",
                        "trans" => "trans",
                        _ => "bad",
                    };
                    if sections.contains_key(key) {
                        return Err(ProblemError::Invalid(item.pos(), format!("duplicate ({key} ...)")));
                    }
                    let allow_primed = key == "trans";
                    let resolve = |s: &str| {
                        if let Some(sort) = by_name.get(s) {
                            return Some(Term::cnst(&UConst::state(s, *sort)));
                        }
                        let base = s.strip_suffix('!')?;
                        let sort = by_name.get(base)?;
                        allow_primed.then(|| Term::cnst(&UConst::primed(base, *sort)))
                    };
                    let t = parse_term(body, &resolve)?;
                    if t.sort() != Sort::Bool {
                        return Err(ProblemError::Invalid(body.pos(), format!("{key} must be Boolean")));
                    }
                    if !t.is_ground() {
                        return Err(ProblemError::Invalid(body.pos(), format!("{key} uses reserved variable names")));
                    }
                    sections.insert(key, t);
                }
                Some("set-info" | "set-option" | "set-logic") => {}
                _ => return Err(ProblemError::Invalid(item.pos(), format!("unknown command {item}"))),
            }
        }
        let take = |k: &'static str, sections: &mut HashMap<&'static str, Term>| sections.remove(k).ok_or(ProblemError::Missing(k));
        let init = take("init", &mut sections)?;
        let trans = take("trans", &mut sections)?;
        let bad = take("bad", &mut sections)?;
        SafetyProblem::new(vars, init, trans, bad)
    }

    /// Render in the input format; `parse(to_text())` yields an equal problem.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for v in &self.vars {
            let _ = writeln!(s, "(declare-state {} {})", v.name, v.sort);
        }
        let _ = writeln!(s, "(init {})", self.init);
        let _ = writeln!(s, "(trans {})", self.trans);
        let _ = writeln!(s, "(bad {})", self.bad);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const INIT_ARRAY: &str = include_str!("../../benchmarks/init_array.tsys");

    #[test]
    fn parses_init_array() {
        let p = SafetyProblem::parse(INIT_ARRAY).unwrap();
        let names: Vec<&str> = p.vars.iter().map(|v| v.name.as_str()).collect();
        assert_eq!(names, ["pc", "i", "j", "sz", "A"]);
        assert_eq!(p.vars[4].sort, Sort::Array);
    }

    #[test]
    fn text_round_trip() {
        let p = SafetyProblem::parse(INIT_ARRAY).unwrap();
        assert_eq!(SafetyProblem::parse(&p.to_text()).unwrap(), p);
    }

    #[test]
    fn rejects_quantifiers() {
        let src = "(declare-state x Int) (init (forall ((k Int)) (< k x))) (trans true) (bad false)";
        assert!(matches!(SafetyProblem::parse(src), Err(ProblemError::Parse(ParseError::Quantifier(_)))));
    }

    #[test]
    fn rejects_primed_outside_trans() {
        let src = "(declare-state x Int) (init (= x! 0)) (trans true) (bad false)";
        assert!(SafetyProblem::parse(src).is_err());
    }

    #[test]
    fn rejects_bad_declarations() {
        for src in [
            "(declare-state x Int) (declare-state x Int) (init true) (trans true) (bad false)",
            "(declare-state 1x Int) (init true) (trans true) (bad false)",
            "(declare-state x Real) (init true) (trans true) (bad false)",
            "(declare-state x Int) (init true) (trans true)",
            "(declare-state x Int) (init x) (trans true) (bad false)",
        ] {
            assert!(SafetyProblem::parse(src).is_err(), "{src}");
        }
    }

    #[test]
    fn names() {
        assert!(valid_name("pc"));
        assert!(valid_name("a.b_c"));
        assert!(!valid_name("select"));
        assert!(!valid_name("x!"));
        assert!(!valid_name(""));
    }
}
