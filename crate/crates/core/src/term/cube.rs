use std::collections::BTreeSet;
use std::fmt;

use super::{Term, TermKind, Op, UConst};

/// A conjunction of literals, kept sorted and duplicate free.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Cube(Vec<Term>);

/// A disjunction of literals, kept sorted and duplicate free.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Clause(Vec<Term>);

fn normalize(mut lits: Vec<Term>, drop: bool) -> Vec<Term> {
    for l in &lits {
        assert!(l.is_literal(), "not a literal: {l}");
    }
    lits.retain(|l| l.as_bool() != Some(drop));
    lits.sort();
    lits.dedup();
    lits
}

impl Cube {
    pub fn new<I: IntoIterator<Item = Term>>(lits: I) -> Cube {
        Cube(normalize(lits.into_iter().collect(), true))
    }

    /// Interpret a conjunction of literals as a cube.
    pub fn from_term(t: &Term) -> Option<Cube> {
        match t.kind() {
            TermKind::App(Op::And, args) if args.iter().all(Term::is_literal) => Some(Cube::new(args.iter().cloned())),
            _ if t.is_literal() => Some(Cube::new([t.clone()])),
            _ => None,
        }
    }

    pub fn literals(&self) -> &[Term] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_term(&self) -> Term {
        Term::and(self.0.clone())
    }

    pub fn negate(&self) -> Clause {
        Clause::new(self.0.iter().map(Term::not))
    }

    pub fn consts(&self) -> BTreeSet<UConst> {
        self.0.iter().flat_map(|l| l.consts()).collect()
    }

    pub fn map(&self, f: impl Fn(&Term) -> Term) -> Cube {
        Cube::new(self.0.iter().map(f))
    }
}

impl Clause {
    pub fn new<I: IntoIterator<Item = Term>>(lits: I) -> Clause {
        Clause(normalize(lits.into_iter().collect(), false))
    }

    /// Interpret a disjunction of literals as a clause.
    pub fn from_term(t: &Term) -> Option<Clause> {
        match t.kind() {
            TermKind::App(Op::Or, args) if args.iter().all(Term::is_literal) => Some(Clause::new(args.iter().cloned())),
            _ if t.is_literal() => Some(Clause::new([t.clone()])),
            _ => None,
        }
    }

    pub fn literals(&self) -> &[Term] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_term(&self) -> Term {
        Term::or(self.0.clone())
    }

    pub fn negate(&self) -> Cube {
        Cube::new(self.0.iter().map(Term::not))
    }

    pub fn consts(&self) -> BTreeSet<UConst> {
        self.0.iter().flat_map(|l| l.consts()).collect()
    }

    pub fn free_vars(&self) -> BTreeSet<u32> {
        self.0.iter().flat_map(|l| l.free_vars()).collect()
    }

    pub fn without(&self, idx: usize) -> Clause {
        let mut lits = self.0.clone();
        lits.remove(idx);
        Clause(lits)
    }

    pub fn map(&self, f: impl Fn(&Term) -> Term) -> Clause {
        Clause::new(self.0.iter().map(f))
    }
}

impl fmt::Display for Cube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_term())
    }
}

impl fmt::Debug for Cube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_term())
    }
}

impl fmt::Debug for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}
