use std::fmt;

use super::error::{ParseError, ParseErrorKind};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Var(String),
    Int(i64),
    /// `#temp`, `#count`, `#sum`, `#end`, ...
    Directive(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Semi,
    Colon,
    If,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Var(s) => write!(f, "`{s}`"),
            Tok::Int(i) => write!(f, "`{i}`"),
            Tok::Directive(d) => write!(f, "`#{d}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::If => f.write_str("`:-`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Ne => f.write_str("`!=`"),
            Tok::Lt => f.write_str("`<`"),
            Tok::Le => f.write_str("`<=`"),
            Tok::Gt => f.write_str("`>`"),
            Tok::Ge => f.write_str("`>=`"),
            Tok::Plus => f.write_str("`+`"),
            Tok::Minus => f.write_str("`-`"),
            Tok::Star => f.write_str("`*`"),
            Tok::Slash => f.write_str("`/`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

/// Splits source text into tokens. Lexical errors are collected and the
/// offending character skipped, so parsing can still report later problems.
pub fn tokenize(src: &str) -> (Vec<Token>, Vec<ParseError>) {
    let mut out = Vec::new();
    let mut errors = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let mut push = |tok: Tok, width: usize, i: &mut usize, col: &mut usize| {
            out.push(Token { tok, line: tl, col: tc });
            *i += width;
            *col += width;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
            }
            '%' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            'a'..='z' | 'A'..='Z' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                col += i - start;
                let tok = if c.is_ascii_uppercase() {
                    Tok::Var(word)
                } else {
                    Tok::Ident(word)
                };
                out.push(Token { tok, line: tl, col: tc });
            }
            '0'..='9' => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let digits: String = chars[start..i].iter().collect();
                col += i - start;
                match digits.parse::<i64>() {
                    Ok(v) => out.push(Token {
                        tok: Tok::Int(v),
                        line: tl,
                        col: tc,
                    }),
                    Err(_) => errors.push(ParseError::new(tl, tc, ParseErrorKind::IntegerOutOfRange(digits))),
                }
            }
            '#' => {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                if j == start {
                    errors.push(ParseError::new(tl, tc, ParseErrorKind::Lexical('#')));
                    i += 1;
                    col += 1;
                } else {
                    let word: String = chars[start..j].iter().collect();
                    push(Tok::Directive(word), j - i, &mut i, &mut col);
                }
            }
            '(' => push(Tok::LParen, 1, &mut i, &mut col),
            ')' => push(Tok::RParen, 1, &mut i, &mut col),
            '{' => push(Tok::LBrace, 1, &mut i, &mut col),
            '}' => push(Tok::RBrace, 1, &mut i, &mut col),
            '[' => push(Tok::LBracket, 1, &mut i, &mut col),
            ']' => push(Tok::RBracket, 1, &mut i, &mut col),
            ',' => push(Tok::Comma, 1, &mut i, &mut col),
            '.' => push(Tok::Dot, 1, &mut i, &mut col),
            ';' => push(Tok::Semi, 1, &mut i, &mut col),
            '+' => push(Tok::Plus, 1, &mut i, &mut col),
            '-' => push(Tok::Minus, 1, &mut i, &mut col),
            '*' => push(Tok::Star, 1, &mut i, &mut col),
            '/' => push(Tok::Slash, 1, &mut i, &mut col),
            ':' => {
                if chars.get(i + 1) == Some(&'-') {
                    push(Tok::If, 2, &mut i, &mut col)
                } else {
                    push(Tok::Colon, 1, &mut i, &mut col)
                }
            }
            '=' => {
                if chars.get(i + 1) == Some(&'=') {
                    push(Tok::Eq, 2, &mut i, &mut col)
                } else {
                    push(Tok::Eq, 1, &mut i, &mut col)
                }
            }
            '!' if chars.get(i + 1) == Some(&'=') => push(Tok::Ne, 2, &mut i, &mut col),
            '<' => match chars.get(i + 1) {
                Some('=') => push(Tok::Le, 2, &mut i, &mut col),
                Some('>') => push(Tok::Ne, 2, &mut i, &mut col),
                _ => push(Tok::Lt, 1, &mut i, &mut col),
            },
            '>' => {
                if chars.get(i + 1) == Some(&'=') {
                    push(Tok::Ge, 2, &mut i, &mut col)
                } else {
                    push(Tok::Gt, 1, &mut i, &mut col)
                }
            }
            other => {
                errors.push(ParseError::new(tl, tc, ParseErrorKind::Lexical(other)));
                i += 1;
                col += 1;
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    (out, errors)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        let (t, e) = tokenize(src);
        assert!(e.is_empty(), "{e:?}");
        t.into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn rule_tokens() {
        assert_eq!(
            toks("a(X) :- b(X) in [2]. % trailing"),
            vec![
                Tok::Ident("a".into()),
                Tok::LParen,
                Tok::Var("X".into()),
                Tok::RParen,
                Tok::If,
                Tok::Ident("b".into()),
                Tok::LParen,
                Tok::Var("X".into()),
                Tok::RParen,
                Tok::Ident("in".into()),
                Tok::LBracket,
                Tok::Int(2),
                Tok::RBracket,
                Tok::Dot,
                Tok::Eof,
            ]
        );
    }

    #[test]
    fn operators() {
        assert_eq!(
            toks("W>=Et, X<>Y, A<=B"),
            vec![
                Tok::Var("W".into()),
                Tok::Ge,
                Tok::Var("Et".into()),
                Tok::Comma,
                Tok::Var("X".into()),
                Tok::Ne,
                Tok::Var("Y".into()),
                Tok::Comma,
                Tok::Var("A".into()),
                Tok::Le,
                Tok::Var("B".into()),
                Tok::Eof,
            ]
        );
    }

    #[test]
    fn lexical_error_positions() {
        let (_, errs) = tokenize("a.\n  b & c.");
        assert_eq!(errs.len(), 1);
        assert_eq!((errs[0].line, errs[0].col), (2, 5));
    }
}
