use std::fmt::{self, Write};

use super::{Op, Term, TermKind};

fn op_name(op: Op) -> &'static str {
    match op {
        Op::Eq => "=",
        Op::Le => "<=",
        Op::Lt => "<",
        Op::Not => "not",
        Op::And => "and",
        Op::Or => "or",
        Op::Add => "+",
        Op::Mul => "*",
        Op::Mod => "mod",
        Op::Select => "select",
        Op::Store => "store",
        Op::Ite => "ite",
    }
}

fn write_term(t: &Term, out: &mut impl Write) -> fmt::Result {
    match t.kind() {
        TermKind::Bool(b) => write!(out, "{b}"),
        TermKind::Int(n) if *n < 0 => write!(out, "(- {})", n.unsigned_abs()),
        TermKind::Int(n) => write!(out, "{n}"),
        TermKind::Const(c) => out.write_str(&c.symbol()),
        TermKind::Var(v) => write!(out, "v!{v}"),
        TermKind::App(op, args) => {
            write!(out, "({}", op_name(*op))?;
            for a in args {
                out.write_char(' ')?;
                write_term(a, out)?;
            }
            out.write_char(')')
        }
    }
}

/// SMT-LIB2 rendering; variables print as `v!i`.
impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(self, f)
    }
}
