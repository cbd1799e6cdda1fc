use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use super::{ConstKind, Sort, Term, TermError, TermKind, UConst};

/// Finite map from variable indices to ground-or-open Int terms.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Substitution(BTreeMap<u32, Term>);

impl Substitution {
    pub fn new() -> Self {
        Substitution::default()
    }

    pub fn insert(&mut self, v: u32, t: Term) -> Result<(), TermError> {
        if t.sort() != Sort::Int {
            return Err(TermError::SortMismatch { expected: Sort::Int, found: t.sort() });
        }
        self.0.insert(v, t);
        Ok(())
    }

    pub fn get(&self, v: u32) -> Option<&Term> {
        self.0.get(&v)
    }

    pub fn domain(&self) -> BTreeSet<u32> {
        self.0.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &Term)> {
        self.0.iter().map(|(v, t)| (*v, t))
    }

    pub fn range(&self) -> Vec<Term> {
        self.0.values().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `v_i -> sk_i` for every given variable.
    pub fn skolem<I: IntoIterator<Item = u32>>(vars: I) -> Self {
        Substitution(vars.into_iter().map(|v| (v, Term::skolem(v))).collect())
    }

    /// `self | other`: bindings of `self` take precedence.
    pub fn union(&self, other: &Substitution) -> Substitution {
        let mut out = other.0.clone();
        for (v, t) in &self.0 {
            out.insert(*v, t.clone());
        }
        Substitution(out)
    }

    pub fn restrict(&self, vars: &BTreeSet<u32>) -> Substitution {
        Substitution(self.0.iter().filter(|(v, _)| vars.contains(v)).map(|(v, t)| (*v, t.clone())).collect())
    }

    pub fn apply(&self, t: &Term) -> Term {
        if t.is_ground() || self.0.is_empty() {
            return t.clone();
        }
        rewrite(t, &mut |s| match s.kind() {
            TermKind::Var(v) => self.0.get(v).cloned(),
            _ if s.is_ground() => Some(s.clone()),
            _ => None,
        })
    }

    /// Apply the substitution to every term in its own range through `other`.
    pub fn then(&self, other: &Substitution) -> Substitution {
        Substitution(self.0.iter().map(|(v, t)| (*v, other.apply(t))).collect())
    }
}

impl FromIterator<(u32, Term)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (u32, Term)>>(iter: I) -> Self {
        let mut s = Substitution::new();
        for (v, t) in iter {
            s.insert(v, t).expect("substitution values are Int terms");
        }
        s
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, (v, t)) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "v!{v} -> {t}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Top-down rewrite: `f` returns a replacement (not revisited) or `None` to
/// descend. Applications are rebuilt through the smart constructors.
pub fn rewrite(t: &Term, f: &mut dyn FnMut(&Term) -> Option<Term>) -> Term {
    let mut cache: HashMap<Term, Term> = HashMap::new();
    rewrite_rec(t, f, &mut cache)
}

fn rewrite_rec(t: &Term, f: &mut dyn FnMut(&Term) -> Option<Term>, cache: &mut HashMap<Term, Term>) -> Term {
    if let Some(r) = cache.get(t) {
        return r.clone();
    }
    let out = match f(t) {
        Some(r) => r,
        None => match t.kind() {
            TermKind::App(op, args) => {
                let new_args: Vec<Term> = args.iter().map(|a| rewrite_rec(a, f, cache)).collect();
                if new_args == *args {
                    t.clone()
                } else {
                    Term::app(*op, &new_args)
                }
            }
            _ => t.clone(),
        },
    };
    cache.insert(t.clone(), out.clone());
    out
}

/// Replace every free variable `v_i` by the skolem constant `sk_i`.
pub fn skolemize(t: &Term) -> Term {
    Substitution::skolem(t.free_vars()).apply(t)
}

/// Abstract the constants of `u` occurring in `phi` into fresh variables.
///
/// `sk_i` maps back to `v_i`; any other constant takes the lowest index not
/// yet used, in order of first occurrence. Returns the abstracted term and the
/// substitution undoing the abstraction.
pub fn abs(u: &BTreeSet<UConst>, phi: &Term) -> Result<(Term, Substitution), TermError> {
    let present: Vec<UConst> = phi.consts_in_order().into_iter().filter(|c| u.contains(c)).collect();
    let free = phi.free_vars();
    let mut used: BTreeSet<u32> = free.clone();
    for c in &present {
        if c.sort() != Sort::Int {
            return Err(TermError::ArrayAbstraction(c.symbol()));
        }
        if let Some(i) = c.skolem_index() {
            if free.contains(&i) {
                return Err(TermError::VariableCapture(c.symbol()));
            }
            used.insert(i);
        }
    }
    let mut map: HashMap<UConst, u32> = HashMap::new();
    let mut next = 0u32;
    for c in &present {
        let idx = match c.skolem_index() {
            Some(i) => i,
            None => {
                while used.contains(&next) {
                    next += 1;
                }
                used.insert(next);
                next
            }
        };
        map.insert(c.clone(), idx);
    }
    let mut sigma = Substitution::new();
    for (c, i) in &map {
        sigma.insert(*i, Term::cnst(c))?;
    }
    let out = rewrite(phi, &mut |s| match s.kind() {
        TermKind::Const(c) => map.get(c).map(|i| Term::var(*i)),
        _ => None,
    });
    Ok((out, sigma))
}

/// Map state constants to their primed copies.
pub fn prime(t: &Term) -> Result<Term, TermError> {
    if t.consts().iter().any(UConst::is_primed) {
        return Err(TermError::MixedClass(t.to_string()));
    }
    Ok(rewrite(t, &mut |s| match s.kind() {
        TermKind::Const(c) if c.kind() == ConstKind::State => Some(Term::cnst(&c.to_primed())),
        _ => None,
    }))
}

/// Map primed constants back to state constants.
pub fn unprime(t: &Term) -> Result<Term, TermError> {
    if t.consts().iter().any(UConst::is_state) {
        return Err(TermError::MixedClass(t.to_string()));
    }
    Ok(rewrite(t, &mut |s| match s.kind() {
        TermKind::Const(c) if c.kind() == ConstKind::Primed => Some(Term::cnst(&c.to_state())),
        _ => None,
    }))
}
