use std::fmt;

use thiserror::Error;

use crate::symbol::Symbol;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character `{0}`")]
    Lexical(char),
    #[error("integer literal `{0}` does not fit in 64 bits")]
    IntegerOutOfRange(String),
    #[error("malformed window set: {0}")]
    MalformedWindow(String),
    #[error("predicate names must start with a lowercase letter, found `{0}`")]
    UppercasePredicate(String),
    #[error("predicate name `{0}` uses the reserved `aux__` prefix")]
    ReservedName(String),
    #[error("unterminated rule: missing `.`")]
    Unterminated,
    #[error("expected {expected}, found {found}")]
    Unexpected { expected: String, found: String },
    #[error("{0} must be a positive integer")]
    NonPositive(&'static str),
    #[error("fact is not ground: variable `{0}`")]
    NonGround(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub fn new(line: usize, col: usize, kind: ParseErrorKind) -> ParseError {
        ParseError { line, col, kind }
    }
}

/// All errors found in one source text, in source order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseErrors(pub Vec<ParseError>);

impl fmt::Display for ParseErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseErrors {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SafetyViolation {
    /// Variable in the head, a negative literal, a comparison or an
    /// aggregate that no positive streaming literal binds.
    Unbound,
    /// `count X` with a variable counting term under `not`.
    NegatedCountVariable,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("rule {rule}: {}", match .violation {
    SafetyViolation::Unbound => format!("variable `{}` is not bound by a positive streaming literal", .variable),
    SafetyViolation::NegatedCountVariable => format!("counting variable `{}` appears in a negative literal", .variable),
})]
pub struct SafetyError {
    /// Index of the offending rule in the program.
    pub rule: usize,
    pub variable: Symbol,
    pub violation: SafetyViolation,
}
