//! Smart constructors. All of them return canonical terms.

use num_integer::Integer;

use super::linear::LinExpr;
use super::{Op, Sort, Term, TermKind, UConst};

fn expect_sort(t: &Term, sort: Sort) {
    assert_eq!(t.sort(), sort, "ill-sorted argument {t}");
}

impl Term {
    pub fn tt() -> Term {
        Term::intern(TermKind::Bool(true))
    }

    pub fn ff() -> Term {
        Term::intern(TermKind::Bool(false))
    }

    pub fn bool(b: bool) -> Term {
        Term::intern(TermKind::Bool(b))
    }

    pub fn int(n: i64) -> Term {
        Term::intern(TermKind::Int(n))
    }

    pub fn cnst(c: &UConst) -> Term {
        Term::intern(TermKind::Const(c.clone()))
    }

    pub fn var(i: u32) -> Term {
        Term::intern(TermKind::Var(i))
    }

    pub fn skolem(i: u32) -> Term {
        Term::cnst(&UConst::skolem(i))
    }

    // ---- arithmetic ----

    pub fn add<I: IntoIterator<Item = Term>>(parts: I) -> Term {
        let mut e = LinExpr::default();
        for p in parts {
            expect_sort(&p, Sort::Int);
            e = e.add(&LinExpr::from_term(&p));
        }
        e.to_term()
    }

    pub fn sub(a: &Term, b: &Term) -> Term {
        expect_sort(a, Sort::Int);
        expect_sort(b, Sort::Int);
        LinExpr::from_term(a).sub(&LinExpr::from_term(b)).to_term()
    }

    pub fn neg(a: &Term) -> Term {
        Term::mul(-1, a)
    }

    pub fn mul(c: i64, a: &Term) -> Term {
        expect_sort(a, Sort::Int);
        LinExpr::from_term(a).scale(c).to_term()
    }

    /// `(mod a k)` for a positive literal `k`; coefficients are reduced modulo `k`.
    pub fn modulo(a: &Term, k: i64) -> Term {
        expect_sort(a, Sort::Int);
        assert!(k > 0, "modulus must be positive");
        if k == 1 {
            return Term::int(0);
        }
        let e = LinExpr::from_term(a);
        let mut reduced = LinExpr::constant(e.get_constant().rem_euclid(k));
        for (t, c) in e.terms() {
            let c = c.rem_euclid(k);
            if c != 0 {
                reduced = reduced.add(&LinExpr::from_term(t).scale(c));
            }
        }
        if reduced.is_constant() {
            return Term::int(reduced.get_constant());
        }
        Term::intern(TermKind::App(Op::Mod, vec![reduced.to_term(), Term::int(k)]))
    }

    /// The divisibility atom `k | e`.
    pub fn divisible(k: i64, e: &LinExpr) -> Term {
        assert!(k > 0, "modulus must be positive");
        let inner = e.add_constant(-e.get_constant());
        let m = Term::modulo(&inner.to_term(), k);
        Term::eq(&m, &Term::int((-e.get_constant()).rem_euclid(k)))
    }

    // ---- arrays ----

    pub fn select(a: &Term, i: &Term) -> Term {
        expect_sort(a, Sort::Array);
        expect_sort(i, Sort::Int);
        if let TermKind::App(Op::Store, args) = a.kind() {
            if &args[1] == i {
                return args[2].clone();
            }
            if let (Some(x), Some(y)) = (args[1].as_int(), i.as_int()) {
                if x != y {
                    return Term::select(&args[0], i);
                }
            }
        }
        Term::intern(TermKind::App(Op::Select, vec![a.clone(), i.clone()]))
    }

    pub fn store(a: &Term, i: &Term, v: &Term) -> Term {
        expect_sort(a, Sort::Array);
        expect_sort(i, Sort::Int);
        expect_sort(v, Sort::Int);
        if let TermKind::App(Op::Store, args) = a.kind() {
            if &args[1] == i {
                return Term::store(&args[0], i, v);
            }
        }
        Term::intern(TermKind::App(Op::Store, vec![a.clone(), i.clone(), v.clone()]))
    }

    pub fn ite(c: &Term, a: &Term, b: &Term) -> Term {
        expect_sort(c, Sort::Bool);
        assert_eq!(a.sort(), b.sort(), "ite branches differ in sort");
        if c.is_true() || a == b {
            return a.clone();
        }
        if c.is_false() {
            return b.clone();
        }
        if a.sort() == Sort::Bool {
            return Term::or([Term::and([c.clone(), a.clone()]), Term::and([Term::not(c), b.clone()])]);
        }
        Term::intern(TermKind::App(Op::Ite, vec![c.clone(), a.clone(), b.clone()]))
    }

    // ---- atoms ----

    pub fn le(a: &Term, b: &Term) -> Term {
        expect_sort(a, Sort::Int);
        expect_sort(b, Sort::Int);
        le_zero(LinExpr::from_term(a).sub(&LinExpr::from_term(b)))
    }

    pub fn lt(a: &Term, b: &Term) -> Term {
        expect_sort(a, Sort::Int);
        expect_sort(b, Sort::Int);
        le_zero(LinExpr::from_term(a).sub(&LinExpr::from_term(b)).add_constant(1))
    }

    pub fn ge(a: &Term, b: &Term) -> Term {
        Term::le(b, a)
    }

    pub fn gt(a: &Term, b: &Term) -> Term {
        Term::lt(b, a)
    }

    /// `e <= 0` as a canonical atom.
    pub fn le_zero(e: LinExpr) -> Term {
        le_zero(e)
    }

    /// `e = 0` as a canonical atom.
    pub fn eq_zero(e: LinExpr) -> Term {
        eq_zero(e)
    }

    pub fn eq(a: &Term, b: &Term) -> Term {
        assert_eq!(a.sort(), b.sort(), "equality between different sorts");
        if a == b {
            return Term::tt();
        }
        match a.sort() {
            Sort::Int => eq_zero(LinExpr::from_term(a).sub(&LinExpr::from_term(b))),
            Sort::Bool => Term::or([
                Term::and([a.clone(), b.clone()]),
                Term::and([Term::not(a), Term::not(b)]),
            ]),
            Sort::Array => {
                let (x, y) = if a < b { (a, b) } else { (b, a) };
                Term::intern(TermKind::App(Op::Eq, vec![x.clone(), y.clone()]))
            }
        }
    }

    pub fn ne(a: &Term, b: &Term) -> Term {
        Term::not(&Term::eq(a, b))
    }

    // ---- boolean structure ----

    pub fn not(a: &Term) -> Term {
        expect_sort(a, Sort::Bool);
        match a.kind() {
            TermKind::Bool(b) => Term::bool(!b),
            TermKind::App(Op::Not, args) => args[0].clone(),
            TermKind::App(Op::Le, args) => Term::lt(&args[1], &args[0]),
            TermKind::App(Op::Lt, args) => Term::le(&args[1], &args[0]),
            TermKind::App(Op::And, args) => Term::or(args.iter().map(Term::not).collect::<Vec<_>>()),
            TermKind::App(Op::Or, args) => Term::and(args.iter().map(Term::not).collect::<Vec<_>>()),
            _ => Term::intern(TermKind::App(Op::Not, vec![a.clone()])),
        }
    }

    pub fn and<I: IntoIterator<Item = Term>>(parts: I) -> Term {
        junction(Op::And, parts)
    }

    pub fn or<I: IntoIterator<Item = Term>>(parts: I) -> Term {
        junction(Op::Or, parts)
    }

    pub fn implies(a: &Term, b: &Term) -> Term {
        Term::or([Term::not(a), b.clone()])
    }

    /// Rebuild an application through the matching smart constructor.
    pub fn app(op: Op, args: &[Term]) -> Term {
        match op {
            Op::Eq => Term::eq(&args[0], &args[1]),
            Op::Le => Term::le(&args[0], &args[1]),
            Op::Lt => Term::lt(&args[0], &args[1]),
            Op::Not => Term::not(&args[0]),
            Op::And => Term::and(args.to_vec()),
            Op::Or => Term::or(args.to_vec()),
            Op::Add => Term::add(args.to_vec()),
            Op::Mul => Term::mul(args[0].as_int().expect("literal coefficient"), &args[1]),
            Op::Mod => Term::modulo(&args[0], args[1].as_int().expect("literal modulus")),
            Op::Select => Term::select(&args[0], &args[1]),
            Op::Store => Term::store(&args[0], &args[1], &args[2]),
            Op::Ite => Term::ite(&args[0], &args[1], &args[2]),
        }
    }
}

fn junction<I: IntoIterator<Item = Term>>(op: Op, parts: I) -> Term {
    let unit = op == Op::And;
    let mut items: Vec<Term> = Vec::new();
    let mut stack: Vec<Term> = parts.into_iter().collect();
    stack.reverse();
    while let Some(p) = stack.pop() {
        expect_sort(&p, Sort::Bool);
        match p.kind() {
            TermKind::Bool(b) if *b == unit => {}
            TermKind::Bool(_) => return Term::bool(!unit),
            TermKind::App(o, args) if *o == op => stack.extend(args.iter().rev().cloned()),
            _ => items.push(p),
        }
    }
    items.sort();
    items.dedup();
    for t in &items {
        if t.is_literal() && items.binary_search(&Term::not(t)).is_ok() {
            return Term::bool(!unit);
        }
    }
    match items.len() {
        0 => Term::bool(unit),
        1 => items.pop().unwrap(),
        _ => Term::intern(TermKind::App(op, items)),
    }
}

/// Render `pos <= neg + d` (or strict) following the placement rules:
/// with no positive part the constant moves left, with no negative part it
/// stays right, otherwise it joins the side where it is positive.
fn render(op: Op, pos: LinExpr, neg: LinExpr, d: i64) -> Term {
    let (lhs, rhs) = if pos.is_constant() {
        (LinExpr::constant(-d), neg)
    } else if neg.is_constant() {
        (pos, LinExpr::constant(d))
    } else if d >= 0 {
        (pos, neg.add_constant(d))
    } else {
        (pos.add_constant(-d), neg)
    };
    Term::intern(TermKind::App(op, vec![lhs.to_term(), rhs.to_term()]))
}

fn le_zero(e: LinExpr) -> Term {
    if e.is_constant() {
        return Term::bool(e.get_constant() <= 0);
    }
    let g = e.coeff_gcd();
    let k = Integer::div_ceil(&e.get_constant(), &g);
    let (pos, neg) = scale_down(&e, g).split();
    // pos - neg + k <= 0  <=>  pos <= neg + c
    let c = -k;
    if c >= 0 {
        render(Op::Le, pos, neg, c)
    } else {
        render(Op::Lt, pos, neg, c + 1)
    }
}

fn eq_zero(e: LinExpr) -> Term {
    if e.is_constant() {
        return Term::bool(e.get_constant() == 0);
    }
    let g = e.coeff_gcd();
    if e.get_constant() % g != 0 {
        return Term::ff();
    }
    let mut k = e.get_constant() / g;
    let mut lin = scale_down(&e, g);
    if lin.terms().next().map(|(_, c)| c).unwrap() < 0 {
        lin = lin.scale(-1);
        k = -k;
    }
    let (pos, neg) = lin.split();
    // pos - neg + k = 0  <=>  pos = neg - k
    render(Op::Eq, pos, neg, -k)
}

/// Divide the leaf coefficients by `g`, dropping the constant.
fn scale_down(e: &LinExpr, g: i64) -> LinExpr {
    let mut out = LinExpr::default();
    for (t, c) in e.terms() {
        out = out.add(&LinExpr::from_term(t).scale(c / g));
    }
    out
}
