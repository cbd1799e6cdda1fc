//! Hash-consed, sorted terms over linear integer arithmetic and arrays.
//!
//! Every term is built through the smart constructors in [`build`], which
//! keep the representation canonical: linear atoms are normalized, boolean
//! structure is in negation normal form with flattened, sorted connectives.
//! Structurally equal terms are pointer equal.

mod build;
mod cube;
mod linear;
mod parse;
mod print;
pub mod sexp;
mod subst;

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, LazyLock, Mutex};

pub use cube::{Clause, Cube};
pub use linear::LinExpr;
pub use parse::{parse_sort, parse_term, ParseError};
pub use subst::{abs, prime, rewrite, skolemize, unprime, Substitution};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TermError {
    #[error("sort mismatch: expected {expected}, found {found}")]
    SortMismatch { expected: Sort, found: Sort },
    #[error("cannot abstract array constant {0}")]
    ArrayAbstraction(String),
    #[error("abstracting {0} would capture a free variable")]
    VariableCapture(String),
    #[error("term mixes state and primed constants: {0}")]
    MixedClass(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Bool,
    Int,
    /// `(Array Int Int)`, the only array sort.
    Array,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Bool => f.write_str("Bool"),
            Sort::Int => f.write_str("Int"),
            Sort::Array => f.write_str("(Array Int Int)"),
        }
    }
}

/// Which class of uninterpreted constant a symbol belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConstKind {
    State,
    Primed,
    /// `sk_i`, the skolem constant reserved for variable `v_i`.
    Skolem(u32),
    /// Auxiliary constants: unrolled copies, projection witnesses, ...
    Aux,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UConst {
    name: Arc<str>,
    sort: Sort,
    kind: ConstKind,
}

impl UConst {
    pub fn state(name: &str, sort: Sort) -> Self {
        UConst { name: name.into(), sort, kind: ConstKind::State }
    }

    pub fn primed(name: &str, sort: Sort) -> Self {
        UConst { name: name.into(), sort, kind: ConstKind::Primed }
    }

    pub fn skolem(index: u32) -> Self {
        UConst { name: format!("sk!{index}").into(), sort: Sort::Int, kind: ConstKind::Skolem(index) }
    }

    pub fn aux(name: &str, sort: Sort) -> Self {
        UConst { name: name.into(), sort, kind: ConstKind::Aux }
    }

    /// The base name (without the prime marker).
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sort(&self) -> Sort {
        self.sort
    }

    pub fn kind(&self) -> ConstKind {
        self.kind
    }

    pub fn is_state(&self) -> bool {
        self.kind == ConstKind::State
    }

    pub fn is_primed(&self) -> bool {
        self.kind == ConstKind::Primed
    }

    pub fn skolem_index(&self) -> Option<u32> {
        match self.kind {
            ConstKind::Skolem(i) => Some(i),
            _ => None,
        }
    }

    pub fn to_primed(&self) -> UConst {
        UConst { name: self.name.clone(), sort: self.sort, kind: ConstKind::Primed }
    }

    pub fn to_state(&self) -> UConst {
        UConst { name: self.name.clone(), sort: self.sort, kind: ConstKind::State }
    }

    /// The symbol used when printing.
    pub fn symbol(&self) -> String {
        match self.kind {
            ConstKind::Primed => format!("{}!", self.name),
            _ => self.name.to_string(),
        }
    }

    fn group(&self) -> u8 {
        match self.kind {
            ConstKind::State | ConstKind::Primed => 0,
            ConstKind::Skolem(_) => 1,
            ConstKind::Aux => 2,
        }
    }
}

impl Ord for UConst {
    fn cmp(&self, other: &Self) -> Ordering {
        self.group()
            .cmp(&other.group())
            .then_with(|| match (self.kind, other.kind) {
                (ConstKind::Skolem(a), ConstKind::Skolem(b)) => a.cmp(&b),
                _ => self.name.cmp(&other.name),
            })
            .then_with(|| self.is_primed().cmp(&other.is_primed()))
            .then_with(|| self.sort.cmp(&other.sort))
    }
}

impl PartialOrd for UConst {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for UConst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.symbol())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    Eq,
    Le,
    Lt,
    Not,
    And,
    Or,
    Add,
    /// `(* c t)` with an integer literal `c`.
    Mul,
    /// `(mod t k)` with a positive integer literal `k`.
    Mod,
    Select,
    Store,
    Ite,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TermKind {
    Bool(bool),
    Int(i64),
    Const(UConst),
    /// Free variable `v_i` (always of sort Int).
    Var(u32),
    App(Op, Vec<Term>),
}

pub struct Node {
    id: u64,
    sort: Sort,
    ground: bool,
    kind: TermKind,
}

/// A shared, interned term. Equality and hashing are by identity.
#[derive(Clone)]
pub struct Term(Arc<Node>);

static TABLE: LazyLock<Mutex<HashMap<TermKind, Term>>> = LazyLock::new(|| Mutex::new(HashMap::new()));

impl Term {
    /// Intern a node without any normalization.
    pub(crate) fn intern(kind: TermKind) -> Term {
        let mut table = TABLE.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(t) = table.get(&kind) {
            return t.clone();
        }
        let (sort, ground) = match &kind {
            TermKind::Bool(_) => (Sort::Bool, true),
            TermKind::Int(_) => (Sort::Int, true),
            TermKind::Const(c) => (c.sort, true),
            TermKind::Var(_) => (Sort::Int, false),
            TermKind::App(op, args) => {
                let sort = match op {
                    Op::Eq | Op::Le | Op::Lt | Op::Not | Op::And | Op::Or => Sort::Bool,
                    Op::Add | Op::Mul | Op::Mod | Op::Select => Sort::Int,
                    Op::Store => Sort::Array,
                    Op::Ite => args[1].sort(),
                };
                (sort, args.iter().all(Term::is_ground))
            }
        };
        let id = table.len() as u64;
        let t = Term(Arc::new(Node { id, sort, ground, kind: kind.clone() }));
        table.insert(kind, t.clone());
        t
    }

    pub fn kind(&self) -> &TermKind {
        &self.0.kind
    }

    pub fn sort(&self) -> Sort {
        self.0.sort
    }

    /// Creation id; unique but run-dependent, so never used for ordering.
    pub fn id(&self) -> u64 {
        self.0.id
    }

    /// True when the term has no free variables.
    pub fn is_ground(&self) -> bool {
        self.0.ground
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self.kind() {
            TermKind::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self.kind() {
            TermKind::Int(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_const(&self) -> Option<&UConst> {
        match self.kind() {
            TermKind::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_var(&self) -> Option<u32> {
        match self.kind() {
            TermKind::Var(v) => Some(*v),
            _ => None,
        }
    }

    pub fn op(&self) -> Option<Op> {
        match self.kind() {
            TermKind::App(op, _) => Some(*op),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self.kind() {
            TermKind::App(_, args) => args,
            _ => &[],
        }
    }

    pub fn is_true(&self) -> bool {
        self.as_bool() == Some(true)
    }

    pub fn is_false(&self) -> bool {
        self.as_bool() == Some(false)
    }

    /// Atoms: boolean constants, (in)equalities and divisibility atoms.
    pub fn is_atom(&self) -> bool {
        match self.kind() {
            TermKind::Const(c) => c.sort == Sort::Bool,
            TermKind::App(Op::Eq | Op::Le | Op::Lt, _) => true,
            _ => false,
        }
    }

    pub fn is_literal(&self) -> bool {
        match self.kind() {
            TermKind::Bool(_) => true,
            TermKind::App(Op::Not, args) => args[0].is_atom(),
            _ => self.is_atom(),
        }
    }

    /// The atom underlying a literal.
    pub fn atom(&self) -> &Term {
        match self.kind() {
            TermKind::App(Op::Not, args) => &args[0],
            _ => self,
        }
    }

    /// Visit every distinct subterm once, parents before children.
    pub fn visit(&self, f: &mut dyn FnMut(&Term)) {
        let mut seen = HashSet::new();
        let mut stack = vec![self.clone()];
        while let Some(t) = stack.pop() {
            if !seen.insert(t.id()) {
                continue;
            }
            f(&t);
            for a in t.args().iter().rev() {
                stack.push(a.clone());
            }
        }
    }

    /// Uninterpreted constants occurring in the term.
    pub fn consts(&self) -> BTreeSet<UConst> {
        let mut out = BTreeSet::new();
        self.visit(&mut |t| {
            if let TermKind::Const(c) = t.kind() {
                out.insert(c.clone());
            }
        });
        out
    }

    /// Constants in order of first occurrence (pre-order, left to right).
    pub fn consts_in_order(&self) -> Vec<UConst> {
        let mut out: Vec<UConst> = Vec::new();
        self.visit(&mut |t| {
            if let TermKind::Const(c) = t.kind() {
                if !out.contains(c) {
                    out.push(c.clone());
                }
            }
        });
        out
    }

    pub fn free_vars(&self) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        if self.is_ground() {
            return out;
        }
        self.visit(&mut |t| {
            if let TermKind::Var(v) = t.kind() {
                out.insert(*v);
            }
        });
        out
    }

    pub fn contains(&self, sub: &Term) -> bool {
        let mut found = false;
        self.visit(&mut |t| found |= t == sub);
        found
    }

    pub fn contains_const(&self, c: &UConst) -> bool {
        let mut found = false;
        self.visit(&mut |t| found |= t.as_const() == Some(c));
        found
    }

    /// Number of distinct subterms.
    pub fn dag_size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    fn rank(&self) -> u8 {
        match self.kind() {
            TermKind::Bool(_) => 0,
            TermKind::Int(_) => 1,
            TermKind::Var(_) => 2,
            TermKind::Const(_) => 3,
            TermKind::App(..) => 4,
        }
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

impl Eq for Term {}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.id.hash(state)
    }
}

/// Structural total order; stable across runs and threads.
impl Ord for Term {
    fn cmp(&self, other: &Self) -> Ordering {
        if self == other {
            return Ordering::Equal;
        }
        match (self.kind(), other.kind()) {
            (TermKind::Bool(a), TermKind::Bool(b)) => a.cmp(b),
            (TermKind::Int(a), TermKind::Int(b)) => a.cmp(b),
            (TermKind::Var(a), TermKind::Var(b)) => a.cmp(b),
            (TermKind::Const(a), TermKind::Const(b)) => a.cmp(b),
            (TermKind::App(o1, a1), TermKind::App(o2, a2)) => o1.cmp(o2).then_with(|| a1.cmp(a2)),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
