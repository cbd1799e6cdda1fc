use std::collections::HashMap;

use super::sexp::{Pos, Sexp, SexpError};
use super::{Sort, Term};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ParseError {
    #[error(transparent)]
    Syntax(#[from] SexpError),
    #[error("{0}: quantifiers are not allowed here")]
    Quantifier(Pos),
    #[error("{0}: {1}")]
    Invalid(Pos, String),
}

fn invalid<T>(s: &Sexp, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError::Invalid(s.pos(), msg.into()))
}

pub fn parse_sort(s: &Sexp) -> Result<Sort, ParseError> {
    match s {
        Sexp::Atom(a, _) if a == "Int" => Ok(Sort::Int),
        Sexp::Atom(a, _) if a == "Bool" => Ok(Sort::Bool),
        Sexp::List(items, _)
            if items.len() == 3
                && items[0].atom() == Some("Array")
                && items[1].atom() == Some("Int")
                && items[2].atom() == Some("Int") =>
        {
            Ok(Sort::Array)
        }
        _ => invalid(s, format!("unsupported sort {s}")),
    }
}

/// Parse a quantifier-free term. `resolve` maps symbols to constants; the
/// reserved spellings `v!i` and `sk!i` denote variables and skolem constants.
pub fn parse_term(s: &Sexp, resolve: &dyn Fn(&str) -> Option<Term>) -> Result<Term, ParseError> {
    let mut p = TermParser { resolve, lets: Vec::new() };
    p.term(s)
}

struct TermParser<'a> {
    resolve: &'a dyn Fn(&str) -> Option<Term>,
    lets: Vec<HashMap<String, Term>>,
}

fn reserved_index(sym: &str, prefix: &str) -> Option<u32> {
    sym.strip_prefix(prefix).and_then(|rest| rest.parse().ok())
}

impl TermParser<'_> {
    fn symbol(&self, s: &Sexp, sym: &str) -> Result<Term, ParseError> {
        for scope in self.lets.iter().rev() {
            if let Some(t) = scope.get(sym) {
                return Ok(t.clone());
            }
        }
        match sym {
            "true" => return Ok(Term::tt()),
            "false" => return Ok(Term::ff()),
            _ => {}
        }
        if let Ok(n) = sym.parse::<i64>() {
            return Ok(Term::int(n));
        }
        if sym.chars().next().is_some_and(|c| c.is_ascii_digit()) {
            return invalid(s, format!("bad numeral {sym}"));
        }
        if let Some(t) = (self.resolve)(sym) {
            return Ok(t);
        }
        if let Some(i) = reserved_index(sym, "v!") {
            return Ok(Term::var(i));
        }
        if let Some(i) = reserved_index(sym, "sk!") {
            return Ok(Term::skolem(i));
        }
        invalid(s, format!("unknown symbol {sym}"))
    }

    fn sorted(&mut self, s: &Sexp, sort: Sort) -> Result<Term, ParseError> {
        let t = self.term(s)?;
        if t.sort() != sort {
            return invalid(s, format!("expected {sort}, found {} in {s}", t.sort()));
        }
        Ok(t)
    }

    fn all(&mut self, items: &[Sexp], sort: Sort) -> Result<Vec<Term>, ParseError> {
        items.iter().map(|i| self.sorted(i, sort)).collect()
    }

    fn term(&mut self, s: &Sexp) -> Result<Term, ParseError> {
        let items = match s {
            Sexp::Atom(sym, _) => return self.symbol(s, sym),
            Sexp::Str(..) => return invalid(s, "unexpected string literal"),
            Sexp::List(items, _) => items,
        };
        let Some(head) = items.first().and_then(Sexp::atom) else {
            return invalid(s, "expected an operator");
        };
        let args = &items[1..];
        let arity = |n: usize| -> Result<(), ParseError> {
            if args.len() != n {
                return invalid(s, format!("{head} expects {n} arguments"));
            }
            Ok(())
        };
        let at_least = |n: usize| -> Result<(), ParseError> {
            if args.len() < n {
                return invalid(s, format!("{head} expects at least {n} arguments"));
            }
            Ok(())
        };
        match head {
            "forall" | "exists" => Err(ParseError::Quantifier(s.pos())),
            "let" => {
                arity(2)?;
                let Some(binds) = args[0].list() else { return invalid(&args[0], "bad let bindings") };
                let mut scope = HashMap::new();
                for b in binds {
                    match b.list() {
                        Some([Sexp::Atom(name, _), value]) => {
                            let v = self.term(value)?;
                            scope.insert(name.clone(), v);
                        }
                        _ => return invalid(b, "bad let binding"),
                    }
                }
                self.lets.push(scope);
                let body = self.term(&args[1]);
                self.lets.pop();
                body
            }
            "and" => Ok(Term::and(self.all(args, Sort::Bool)?)),
            "or" => Ok(Term::or(self.all(args, Sort::Bool)?)),
            "not" => {
                arity(1)?;
                Ok(Term::not(&self.sorted(&args[0], Sort::Bool)?))
            }
            "=>" => {
                at_least(2)?;
                let ts = self.all(args, Sort::Bool)?;
                let (last, prem) = ts.split_last().unwrap();
                Ok(prem.iter().rev().fold(last.clone(), |acc, p| Term::implies(p, &acc)))
            }
            "xor" => {
                arity(2)?;
                let ts = self.all(args, Sort::Bool)?;
                Ok(Term::not(&Term::eq(&ts[0], &ts[1])))
            }
            "ite" => {
                arity(3)?;
                let c = self.sorted(&args[0], Sort::Bool)?;
                let a = self.term(&args[1])?;
                let b = self.sorted(&args[2], a.sort())?;
                Ok(Term::ite(&c, &a, &b))
            }
            "=" | "distinct" => {
                at_least(2)?;
                let first = self.term(&args[0])?;
                let mut ts = vec![first.clone()];
                for a in &args[1..] {
                    ts.push(self.sorted(a, first.sort())?);
                }
                let mut parts = Vec::new();
                if head == "=" {
                    for w in ts.windows(2) {
                        parts.push(Term::eq(&w[0], &w[1]));
                    }
                } else {
                    for i in 0..ts.len() {
                        for j in i + 1..ts.len() {
                            parts.push(Term::ne(&ts[i], &ts[j]));
                        }
                    }
                }
                Ok(Term::and(parts))
            }
            "<=" | "<" | ">=" | ">" => {
                at_least(2)?;
                let ts = self.all(args, Sort::Int)?;
                let mk = match head {
                    "<=" => Term::le,
                    "<" => Term::lt,
                    ">=" => Term::ge,
                    _ => Term::gt,
                };
                Ok(Term::and(ts.windows(2).map(|w| mk(&w[0], &w[1])).collect::<Vec<_>>()))
            }
            "+" => {
                at_least(1)?;
                Ok(Term::add(self.all(args, Sort::Int)?))
            }
            "-" => {
                at_least(1)?;
                let ts = self.all(args, Sort::Int)?;
                if ts.len() == 1 {
                    return Ok(Term::neg(&ts[0]));
                }
                Ok(ts[1..].iter().fold(ts[0].clone(), |acc, t| Term::sub(&acc, t)))
            }
            "*" => {
                at_least(1)?;
                let ts = self.all(args, Sort::Int)?;
                let mut coeff = 1i64;
                let mut rest: Option<Term> = None;
                for t in ts {
                    match t.as_int() {
                        Some(n) => {
                            coeff = coeff.checked_mul(n).ok_or_else(|| ParseError::Invalid(s.pos(), "overflow".into()))?
                        }
                        None if rest.is_none() => rest = Some(t),
                        None => return invalid(s, "nonlinear multiplication"),
                    }
                }
                Ok(match rest {
                    Some(t) => Term::mul(coeff, &t),
                    None => Term::int(coeff),
                })
            }
            "mod" => {
                arity(2)?;
                let a = self.sorted(&args[0], Sort::Int)?;
                match self.sorted(&args[1], Sort::Int)?.as_int() {
                    Some(k) if k > 0 => Ok(Term::modulo(&a, k)),
                    _ => invalid(s, "mod expects a positive literal modulus"),
                }
            }
            "select" => {
                arity(2)?;
                let a = self.sorted(&args[0], Sort::Array)?;
                let i = self.sorted(&args[1], Sort::Int)?;
                Ok(Term::select(&a, &i))
            }
            "store" => {
                arity(3)?;
                let a = self.sorted(&args[0], Sort::Array)?;
                let i = self.sorted(&args[1], Sort::Int)?;
                let v = self.sorted(&args[2], Sort::Int)?;
                Ok(Term::store(&a, &i, &v))
            }
            _ => invalid(s, format!("unsupported operator {head}")),
        }
    }
}
