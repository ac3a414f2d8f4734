//! Printing in the concrete syntax accepted by the parser.

use std::fmt::{self, Display, Formatter, Write};

use super::ast::*;

impl Display for Value {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Sym(s) => write!(f, "{s}"),
        }
    }
}

impl Display for Term {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(c) => write!(f, "{c}"),
        }
    }
}

fn write_args<T: Display>(f: &mut Formatter<'_>, args: &[T]) -> fmt::Result {
    if args.is_empty() {
        return Ok(());
    }
    f.write_char('(')?;
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            f.write_char(',')?;
        }
        write!(f, "{a}")?;
    }
    f.write_char(')')
}

impl Display for Atom {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.pred)?;
        write_args(f, &self.terms)
    }
}

impl Display for GroundAtom {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.pred)?;
        write_args(f, &self.args)
    }
}

impl Display for WindowSet {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self.form() {
            WindowForm::Interval(w) => write!(f, "[{w}]"),
            WindowForm::Set => {
                f.write_char('{')?;
                for (i, d) in self.offsets().iter().enumerate() {
                    if i > 0 {
                        f.write_char(',')?;
                    }
                    write!(f, "{d}")?;
                }
                f.write_char('}')
            }
        }
    }
}

impl Display for StreamingLiteral {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if self.negated {
            f.write_str("not ")?;
        }
        write!(f, "{}", self.atom)?;
        let w = &self.window;
        match &self.modality {
            Modality::Bare => Ok(()),
            Modality::In => write!(f, " in {w}"),
            Modality::AtLeast(c) => write!(f, " at least {c} in {w}"),
            Modality::AtMost(c) => write!(f, " at most {c} in {w}"),
            Modality::Always => write!(f, " always in {w}"),
            Modality::Count(t) => write!(f, " count {t} in {w}"),
        }
    }
}

fn precedence(op: ArithOp) -> u8 {
    match op {
        ArithOp::Add | ArithOp::Sub => 1,
        ArithOp::Mul | ArithOp::Div => 2,
    }
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Term(t) => write!(f, "{t}"),
            Expr::Binary(l, op, r) => {
                let p = precedence(*op);
                match l.as_ref() {
                    Expr::Binary(_, lop, _) if precedence(*lop) < p => write!(f, "({l})")?,
                    _ => write!(f, "{l}")?,
                }
                write!(f, "{}", op.as_str())?;
                match r.as_ref() {
                    Expr::Binary(_, rop, _) if precedence(*rop) <= p => write!(f, "({r})"),
                    // `X - -1` would lex as a binary minus followed by a literal.
                    Expr::Term(Term::Const(Value::Int(i))) if *i < 0 => write!(f, "({r})"),
                    _ => write!(f, "{r}"),
                }
            }
        }
    }
}

impl Display for Builtin {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.lhs, self.op.as_str(), self.rhs)
    }
}

impl Display for Condition {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Atom(a) => write!(f, "{a}"),
            Condition::Builtin(b) => write!(f, "{b}"),
        }
    }
}

impl Display for Aggregate {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str(match self.func {
            AggFunc::Count => "#count{",
            AggFunc::Sum => "#sum{",
        })?;
        for (i, e) in self.elements.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            for (j, t) in e.terms.iter().enumerate() {
                if j > 0 {
                    f.write_char(',')?;
                }
                write!(f, "{t}")?;
            }
            if !e.condition.is_empty() {
                f.write_str(": ")?;
                for (j, c) in e.condition.iter().enumerate() {
                    if j > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{c}")?;
                }
            }
        }
        write!(f, "}}{}{}", self.op.as_str(), self.guard)
    }
}

impl Display for BodyLiteral {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            BodyLiteral::Stream(s) => write!(f, "{s}"),
            BodyLiteral::Builtin(b) => write!(f, "{b}"),
            BodyLiteral::Aggregate(a) => write!(f, "{a}"),
        }
    }
}

impl Display for Rule {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if self.temp {
            f.write_str("#temp ")?;
        }
        write!(f, "{}", self.head)?;
        if !self.body.is_empty() {
            f.write_str(" :- ")?;
            for (i, l) in self.body.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{l}")?;
            }
        }
        f.write_char('.')
    }
}

impl Display for Program {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}
