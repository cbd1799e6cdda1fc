use std::collections::BTreeMap;

use num_integer::Integer;

use super::{Op, Term, TermKind};

/// A linear combination `sum(c_i * t_i) + k` over non-arithmetic leaves.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinExpr {
    coeffs: BTreeMap<Term, i64>,
    constant: i64,
}

fn ck(v: Option<i64>) -> i64 {
    v.expect("integer overflow in linear arithmetic")
}

impl LinExpr {
    pub fn constant(k: i64) -> Self {
        LinExpr { coeffs: BTreeMap::new(), constant: k }
    }

    /// Decompose an Int term.
    pub fn from_term(t: &Term) -> Self {
        let mut e = LinExpr::default();
        e.add_term(t, 1);
        e
    }

    fn add_term(&mut self, t: &Term, scale: i64) {
        match t.kind() {
            TermKind::Int(n) => self.constant = ck(self.constant.checked_add(ck(n.checked_mul(scale)))),
            TermKind::App(Op::Add, args) => {
                for a in args {
                    self.add_term(a, scale);
                }
            }
            TermKind::App(Op::Mul, args) => {
                let c = args[0].as_int().expect("non-literal coefficient");
                self.add_term(&args[1], ck(c.checked_mul(scale)));
            }
            _ => {
                let entry = self.coeffs.entry(t.clone()).or_insert(0);
                *entry = ck(entry.checked_add(scale));
                if *entry == 0 {
                    self.coeffs.remove(t);
                }
            }
        }
    }

    pub fn get_constant(&self) -> i64 {
        self.constant
    }

    pub fn coeff(&self, t: &Term) -> i64 {
        self.coeffs.get(t).copied().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Term, i64)> {
        self.coeffs.iter().map(|(t, c)| (t, *c))
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, other: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        out.constant = ck(out.constant.checked_add(other.constant));
        for (t, c) in &other.coeffs {
            let entry = out.coeffs.entry(t.clone()).or_insert(0);
            *entry = ck(entry.checked_add(*c));
            if *entry == 0 {
                out.coeffs.remove(t);
            }
        }
        out
    }

    pub fn scale(&self, k: i64) -> LinExpr {
        if k == 0 {
            return LinExpr::default();
        }
        LinExpr {
            coeffs: self.coeffs.iter().map(|(t, c)| (t.clone(), ck(c.checked_mul(k)))).collect(),
            constant: ck(self.constant.checked_mul(k)),
        }
    }

    pub fn sub(&self, other: &LinExpr) -> LinExpr {
        self.add(&other.scale(-1))
    }

    pub fn add_constant(&self, k: i64) -> LinExpr {
        let mut out = self.clone();
        out.constant = ck(out.constant.checked_add(k));
        out
    }

    /// Remove the leaf `t`, returning its coefficient.
    pub fn take(&mut self, t: &Term) -> i64 {
        self.coeffs.remove(t).unwrap_or(0)
    }

    /// gcd of the leaf coefficients (0 when constant).
    pub fn coeff_gcd(&self) -> i64 {
        self.coeffs.values().fold(0i64, |g, c| g.gcd(c))
    }

    /// The canonical Int term for this expression.
    pub fn to_term(&self) -> Term {
        let mut parts: Vec<Term> = Vec::with_capacity(self.coeffs.len() + 1);
        for (t, c) in &self.coeffs {
            parts.push(monomial(*c, t));
        }
        if self.constant != 0 || parts.is_empty() {
            parts.push(Term::intern(TermKind::Int(self.constant)));
        }
        if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Term::intern(TermKind::App(Op::Add, parts))
        }
    }

    /// Split into the positive and negated-negative parts: `self = pos - neg + k`.
    pub(crate) fn split(&self) -> (LinExpr, LinExpr) {
        let mut pos = LinExpr::default();
        let mut neg = LinExpr::default();
        for (t, c) in &self.coeffs {
            if *c > 0 {
                pos.coeffs.insert(t.clone(), *c);
            } else {
                neg.coeffs.insert(t.clone(), -*c);
            }
        }
        (pos, neg)
    }
}

fn monomial(c: i64, t: &Term) -> Term {
    if c == 1 {
        t.clone()
    } else {
        Term::intern(TermKind::App(Op::Mul, vec![Term::intern(TermKind::Int(c)), t.clone()]))
    }
}
