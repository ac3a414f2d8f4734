//! Recursive-descent parser for rule programs and wire fact lines.
//!
//! ```text
//! program   ::= rule*
//! rule      ::= ["#temp"] atom [":-" body] "."
//! body      ::= literal ("," literal)*
//! literal   ::= ["not"] atom [suffix] | builtin | aggregate
//! suffix    ::= "in" window
//!             | "at" "least" INT "in" window
//!             | "at" "most" INT "in" window
//!             | "always" "in" window
//!             | "count" term "in" window
//! window    ::= "{" INT ("," INT)* "}" | "[" INT "]"
//! builtin   ::= expr cmp expr
//! aggregate ::= ("#count" | "#sum") "{" element (";" element)* "}" cmp term
//! element   ::= term ("," term)* [":" cond ("," cond)*]
//! ```

use super::ast::*;
use super::error::{ParseError, ParseErrorKind, ParseErrors};
use super::lexer::{tokenize, Tok, Token};
use crate::symbol::Symbol;

pub const RESERVED_PREFIX: &str = "aux__";

/// Parses a program. Shortcuts (`in`, `at most`, bare atoms, `[w]`) are kept
/// as written; see [`super::desugar`].
pub fn parse_program(src: &str) -> Result<Program, ParseErrors> {
    let (tokens, mut errors) = tokenize(src);
    let mut p = Parser { tokens, pos: 0 };
    let mut program = Program::default();
    while p.peek() != &Tok::Eof {
        let start = p.current();
        let pos = Pos {
            line: start.line,
            col: start.col,
        };
        match p.rule() {
            Ok(rule) => {
                program.rules.push(rule);
                program.positions.push(pos);
            }
            Err(e) => {
                errors.push(e);
                p.recover();
            }
        }
    }
    if errors.is_empty() {
        Ok(program)
    } else {
        errors.sort_by_key(|e| (e.line, e.col));
        Err(ParseErrors(errors))
    }
}

/// One line of the input wire protocol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WireLine {
    Fact(GroundAtom),
    /// `#end.` closes the current time point.
    EndOfTick,
    /// Blank or comment line.
    Skip,
}

pub fn parse_fact_line(line: &str) -> Result<WireLine, ParseError> {
    let (tokens, errors) = tokenize(line);
    if let Some(e) = errors.into_iter().next() {
        return Err(e);
    }
    let mut p = Parser { tokens, pos: 0 };
    match p.peek() {
        Tok::Eof => return Ok(WireLine::Skip),
        Tok::Directive(d) if d == "end" => {
            p.bump();
            p.expect(Tok::Dot, "`.`")?;
            p.expect(Tok::Eof, "end of line")?;
            return Ok(WireLine::EndOfTick);
        }
        _ => {}
    }
    let tok = p.current().clone();
    let atom = p.atom()?;
    p.expect(Tok::Dot, "`.`")?;
    p.expect(Tok::Eof, "end of line")?;
    let mut args = Vec::with_capacity(atom.terms.len());
    for t in atom.terms {
        match t {
            Term::Const(c) => args.push(c),
            Term::Var(v) => {
                return Err(ParseError::new(
                    tok.line,
                    tok.col,
                    ParseErrorKind::NonGround(v.as_str().to_owned()),
                ))
            }
        }
    }
    Ok(WireLine::Fact(GroundAtom { pred: atom.pred, args }))
}

/// Parses a block of facts (`p(1). q.`), as used by background files.
pub fn parse_facts(src: &str) -> Result<Vec<GroundAtom>, ParseErrors> {
    let program = parse_program(src)?;
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for (rule, pos) in program.rules.iter().zip(&program.positions) {
        if !rule.body.is_empty() || rule.temp {
            errors.push(ParseError::new(
                pos.line,
                pos.col,
                ParseErrorKind::Unexpected {
                    expected: "a ground fact".into(),
                    found: "a rule".into(),
                },
            ));
            continue;
        }
        let mut args = Vec::new();
        for t in &rule.head.terms {
            match t {
                Term::Const(c) => args.push(*c),
                Term::Var(v) => errors.push(ParseError::new(
                    pos.line,
                    pos.col,
                    ParseErrorKind::NonGround(v.as_str().to_owned()),
                )),
            }
        }
        out.push(GroundAtom {
            pred: rule.head.pred,
            args,
        });
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(ParseErrors(errors))
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn current(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, kind: ParseErrorKind) -> ParseError {
        let t = self.current();
        ParseError::new(t.line, t.col, kind)
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        if self.peek() == &Tok::Eof {
            return self.error_here(ParseErrorKind::Unterminated);
        }
        self.error_here(ParseErrorKind::Unexpected {
            expected: expected.to_owned(),
            found: self.peek().to_string(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> PResult<Token> {
        if self.peek() == &tok {
            Ok(self.bump())
        } else {
            Err(self.unexpected(what))
        }
    }

    fn is_ident(&self, word: &str) -> bool {
        matches!(self.peek(), Tok::Ident(w) if w == word)
    }

    fn expect_ident(&mut self, word: &str) -> PResult<()> {
        if self.is_ident(word) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{word}`")))
        }
    }

    /// Skips past the next `.` so parsing can resume at the following rule.
    fn recover(&mut self) {
        loop {
            match self.peek() {
                Tok::Eof => return,
                Tok::Dot => {
                    self.bump();
                    return;
                }
                _ => {
                    self.bump();
                }
            }
        }
    }

    fn rule(&mut self) -> PResult<Rule> {
        let temp = matches!(self.peek(), Tok::Directive(d) if d == "temp");
        if temp {
            self.bump();
        }
        let head = self.atom()?;
        let mut body = Vec::new();
        match self.peek() {
            Tok::Dot => {
                self.bump();
            }
            Tok::If => {
                self.bump();
                loop {
                    body.push(self.body_literal()?);
                    match self.peek() {
                        Tok::Comma => {
                            self.bump();
                        }
                        Tok::Dot => {
                            self.bump();
                            break;
                        }
                        _ => return Err(self.unexpected("`,` or `.`")),
                    }
                }
            }
            _ => return Err(self.unexpected("`:-` or `.`")),
        }
        Ok(Rule { temp, head, body })
    }

    fn predicate_name(&mut self) -> PResult<Symbol> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                if name.starts_with(RESERVED_PREFIX) {
                    return Err(self.error_here(ParseErrorKind::ReservedName(name)));
                }
                if name == "not" {
                    return Err(self.unexpected("a predicate name"));
                }
                self.bump();
                Ok(Symbol::intern(&name))
            }
            Tok::Var(name) => Err(self.error_here(ParseErrorKind::UppercasePredicate(name))),
            _ => Err(self.unexpected("a predicate name")),
        }
    }

    fn atom(&mut self) -> PResult<Atom> {
        let pred = self.predicate_name()?;
        let mut terms = Vec::new();
        if self.peek() == &Tok::LParen {
            self.bump();
            loop {
                terms.push(self.term()?);
                match self.peek() {
                    Tok::Comma => {
                        self.bump();
                    }
                    Tok::RParen => {
                        self.bump();
                        break;
                    }
                    _ => return Err(self.unexpected("`,` or `)`")),
                }
            }
        }
        Ok(Atom { pred, terms })
    }

    fn term(&mut self) -> PResult<Term> {
        match self.peek().clone() {
            Tok::Var(v) => {
                self.bump();
                Ok(Term::Var(Symbol::intern(&v)))
            }
            Tok::Ident(c) => {
                self.bump();
                Ok(Term::Const(Value::Sym(Symbol::intern(&c))))
            }
            Tok::Int(i) => {
                self.bump();
                Ok(Term::Const(Value::Int(i)))
            }
            Tok::Minus => {
                if let Tok::Int(i) = *self.peek_at(1) {
                    self.bump();
                    self.bump();
                    Ok(Term::Const(Value::Int(-i)))
                } else {
                    Err(self.unexpected("a term"))
                }
            }
            _ => Err(self.unexpected("a term")),
        }
    }

    fn body_literal(&mut self) -> PResult<BodyLiteral> {
        match self.peek().clone() {
            Tok::Ident(w) if w == "not" => {
                self.bump();
                if let Tok::Directive(_) = self.peek() {
                    return Err(self.unexpected("a predicate atom after `not`"));
                }
                let lit = self.streaming_literal(true)?;
                Ok(BodyLiteral::Stream(lit))
            }
            Tok::Directive(d) if d == "count" || d == "sum" => Ok(BodyLiteral::Aggregate(self.aggregate()?)),
            Tok::Ident(_) if is_cmp(self.peek_at(1)) => Ok(BodyLiteral::Builtin(self.builtin()?)),
            Tok::Ident(_) => Ok(BodyLiteral::Stream(self.streaming_literal(false)?)),
            Tok::Var(name) if self.peek_at(1) == &Tok::LParen => {
                Err(self.error_here(ParseErrorKind::UppercasePredicate(name)))
            }
            Tok::Var(_) | Tok::Int(_) | Tok::Minus | Tok::LParen => Ok(BodyLiteral::Builtin(self.builtin()?)),
            _ => Err(self.unexpected("a body literal")),
        }
    }

    fn streaming_literal(&mut self, negated: bool) -> PResult<StreamingLiteral> {
        let atom = self.atom()?;
        let (modality, window) = if self.is_ident("in") {
            self.bump();
            (Modality::In, self.window()?)
        } else if self.is_ident("at") {
            self.bump();
            let most = if self.is_ident("least") {
                false
            } else if self.is_ident("most") {
                true
            } else {
                return Err(self.unexpected("`least` or `most`"));
            };
            self.bump();
            let c = self.natural()?;
            self.expect_ident("in")?;
            let window = self.window()?;
            if most {
                (Modality::AtMost(c), window)
            } else {
                if c == 0 {
                    return Err(self.error_here(ParseErrorKind::NonPositive("`at least` bound")));
                }
                (Modality::AtLeast(c), window)
            }
        } else if self.is_ident("always") {
            self.bump();
            self.expect_ident("in")?;
            (Modality::Always, self.window()?)
        } else if self.is_ident("count") {
            self.bump();
            let t = self.term()?;
            match t {
                Term::Const(Value::Int(c)) if c < 1 => {
                    return Err(self.error_here(ParseErrorKind::NonPositive("`count` constant")))
                }
                Term::Const(Value::Sym(_)) => {
                    return Err(self.error_here(ParseErrorKind::NonPositive("`count` constant")))
                }
                _ => {}
            }
            self.expect_ident("in")?;
            (Modality::Count(t), self.window()?)
        } else {
            (Modality::Bare, WindowSet::current())
        };
        Ok(StreamingLiteral {
            negated,
            atom,
            modality,
            window,
        })
    }

    fn natural(&mut self) -> PResult<u64> {
        match *self.peek() {
            Tok::Int(i) if i >= 0 => {
                self.bump();
                Ok(i as u64)
            }
            _ => Err(self.unexpected("a non-negative integer")),
        }
    }

    fn window(&mut self) -> PResult<WindowSet> {
        match self.peek() {
            Tok::LBracket => {
                self.bump();
                let w = match *self.peek() {
                    Tok::Int(i) => i,
                    _ => {
                        return Err(self.error_here(ParseErrorKind::MalformedWindow("expected an integer width".into())))
                    }
                };
                self.bump();
                self.expect(Tok::RBracket, "`]`")?;
                if w < 1 || w > u32::MAX as i64 {
                    return Err(self.error_here(ParseErrorKind::MalformedWindow(format!(
                        "interval width must be at least 1, found {w}"
                    ))));
                }
                Ok(WindowSet::interval(w as u32).expect("w >= 1"))
            }
            Tok::LBrace => {
                self.bump();
                let mut offsets = Vec::new();
                if self.peek() == &Tok::RBrace {
                    return Err(self.error_here(ParseErrorKind::MalformedWindow("empty offset set".into())));
                }
                loop {
                    match *self.peek() {
                        Tok::Int(i) if (0..=u32::MAX as i64).contains(&i) => {
                            self.bump();
                            offsets.push(i as u32);
                        }
                        _ => {
                            return Err(self.error_here(ParseErrorKind::MalformedWindow(
                                "offsets must be non-negative integers".into(),
                            )))
                        }
                    }
                    match self.peek() {
                        Tok::Comma => {
                            self.bump();
                        }
                        Tok::RBrace => {
                            self.bump();
                            break;
                        }
                        _ => return Err(self.error_here(ParseErrorKind::MalformedWindow("expected `,` or `}`".into()))),
                    }
                }
                Ok(WindowSet::from_offsets(offsets).expect("non-empty"))
            }
            _ => Err(self.error_here(ParseErrorKind::MalformedWindow("expected `{` or `[`".into()))),
        }
    }

    fn cmp_op(&mut self) -> PResult<CmpOp> {
        let op = match self.peek() {
            Tok::Eq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            _ => return Err(self.unexpected("a comparison operator")),
        };
        self.bump();
        Ok(op)
    }

    fn builtin(&mut self) -> PResult<Builtin> {
        let lhs = self.expr()?;
        let op = self.cmp_op()?;
        let rhs = self.expr()?;
        Ok(Builtin { lhs, op, rhs })
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => ArithOp::Add,
                Tok::Minus => ArithOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.product()?;
            lhs = Expr::Binary(Box::new(lhs), op, Box::new(rhs));
        }
    }

    fn product(&mut self) -> PResult<Expr> {
        let mut lhs = self.primary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => ArithOp::Mul,
                Tok::Slash => ArithOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.primary()?;
            lhs = Expr::Binary(Box::new(lhs), op, Box::new(rhs));
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        if self.peek() == &Tok::LParen {
            self.bump();
            let e = self.expr()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(e);
        }
        Ok(Expr::Term(self.term()?))
    }

    fn aggregate(&mut self) -> PResult<Aggregate> {
        let func = match self.bump().tok {
            Tok::Directive(d) if d == "count" => AggFunc::Count,
            _ => AggFunc::Sum,
        };
        self.expect(Tok::LBrace, "`{`")?;
        let mut elements = Vec::new();
        if self.peek() != &Tok::RBrace {
            loop {
                elements.push(self.agg_element()?);
                match self.peek() {
                    Tok::Semi => {
                        self.bump();
                    }
                    Tok::RBrace => break,
                    _ => return Err(self.unexpected("`;` or `}`")),
                }
            }
        }
        self.expect(Tok::RBrace, "`}`")?;
        let op = self.cmp_op()?;
        let guard = self.term()?;
        Ok(Aggregate {
            func,
            elements,
            op,
            guard,
        })
    }

    fn agg_element(&mut self) -> PResult<AggElement> {
        let mut terms = vec![self.term()?];
        while self.peek() == &Tok::Comma {
            self.bump();
            terms.push(self.term()?);
        }
        let mut condition = Vec::new();
        if self.peek() == &Tok::Colon {
            self.bump();
            loop {
                let cond = match self.peek() {
                    Tok::Ident(_) if !is_cmp(self.peek_at(1)) => Condition::Atom(self.atom()?),
                    _ => Condition::Builtin(self.builtin()?),
                };
                condition.push(cond);
                if self.peek() == &Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        Ok(AggElement { terms, condition })
    }
}

fn is_cmp(t: &Tok) -> bool {
    matches!(t, Tok::Eq | Tok::Ne | Tok::Lt | Tok::Le | Tok::Gt | Tok::Ge)
}
