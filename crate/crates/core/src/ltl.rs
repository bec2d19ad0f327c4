//! LTL formulas over event atoms: AST, canonical printer and parser.
//!
//! The surface syntax is fully parenthesized and has no precedence rules:
//!
//! ```text
//! φ ::= eventN | (! φ) | (X φ) | (G φ) | (F φ) | (φ & φ) | (φ | φ) | (φ -> φ)
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A 1-based event index; printed as `event<i>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Event(pub u32);

impl Event {
    pub fn index(self) -> u32 {
        self.0
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "event{}", self.0)
    }
}

/// The events `event1..eventn`.
pub fn universe(n: u32) -> Vec<Event> {
    (1..=n).map(Event).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Next,
    Always,
    Eventually,
    Not,
}

impl UnaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnaryOp::Next => "X",
            UnaryOp::Always => "G",
            UnaryOp::Eventually => "F",
            UnaryOp::Not => "!",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    And,
    Or,
    Implies,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::And => "&",
            BinaryOp::Or => "|",
            BinaryOp::Implies => "->",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(Event),
    Unary(UnaryOp, Box<Formula>),
    Binary(BinaryOp, Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(i: u32) -> Self {
        Formula::Atom(Event(i))
    }

    pub fn unary(op: UnaryOp, operand: Formula) -> Self {
        Formula::Unary(op, Box::new(operand))
    }

    pub fn binary(op: BinaryOp, left: Formula, right: Formula) -> Self {
        Formula::Binary(op, Box::new(left), Box::new(right))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(operand: Formula) -> Self {
        Self::unary(UnaryOp::Not, operand)
    }

    pub fn is_atom(&self) -> bool {
        matches!(self, Formula::Atom(_))
    }

    /// Number of unary and binary operator nodes.
    pub fn operator_count(&self) -> usize {
        match self {
            Formula::Atom(_) => 0,
            Formula::Unary(_, a) => 1 + a.operator_count(),
            Formula::Binary(_, a, b) => 1 + a.operator_count() + b.operator_count(),
        }
    }

    /// Maximum number of nested `X` operators on any root-to-leaf path.
    pub fn next_depth(&self) -> usize {
        match self {
            Formula::Atom(_) => 0,
            Formula::Unary(UnaryOp::Next, a) => 1 + a.next_depth(),
            Formula::Unary(_, a) => a.next_depth(),
            Formula::Binary(_, a, b) => a.next_depth().max(b.next_depth()),
        }
    }

    /// Atoms in left-to-right order, with repetitions.
    pub fn atoms(&self) -> Vec<Event> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut Vec<Event>) {
        match self {
            Formula::Atom(e) => out.push(*e),
            Formula::Unary(_, a) => a.collect_atoms(out),
            Formula::Binary(_, a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// Subformula occurrences in post-order (left, right, parent).
    pub fn post_order(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        self.collect_post_order(&mut out);
        out
    }

    fn collect_post_order<'a>(&'a self, out: &mut Vec<&'a Formula>) {
        match self {
            Formula::Atom(_) => {}
            Formula::Unary(_, a) => a.collect_post_order(out),
            Formula::Binary(_, a, b) => {
                a.collect_post_order(out);
                b.collect_post_order(out);
            }
        }
        out.push(self);
    }

    /// First atom whose index is not in `1..=n`.
    pub fn atom_outside(&self, n: u32) -> Option<Event> {
        self.atoms().into_iter().find(|e| e.0 == 0 || e.0 > n)
    }

    /// Prints the formula with every atom replaced by `atom_text(e)`.
    pub fn write_with<F>(&self, out: &mut String, atom_text: &F)
    where
        F: Fn(Event) -> String,
    {
        match self {
            Formula::Atom(e) => out.push_str(&atom_text(*e)),
            Formula::Unary(op, a) => {
                out.push('(');
                out.push_str(op.symbol());
                out.push(' ');
                a.write_with(out, atom_text);
                out.push(')');
            }
            Formula::Binary(op, a, b) => {
                out.push('(');
                a.write_with(out, atom_text);
                out.push(' ');
                out.push_str(op.symbol());
                out.push(' ');
                b.write_with(out, atom_text);
                out.push(')');
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.write_with(&mut s, &|e| e.to_string());
        f.write_str(&s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown atom `{name}` at byte {position}")]
    UnknownAtom { position: usize, name: String },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { position, .. } | ParseError::UnknownAtom { position, .. } => *position,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Open,
    Close,
    Bang,
    Amp,
    Pipe,
    Arrow,
    Ident(String),
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    /// Returns the next token and the byte offset it starts at.
    fn next(&mut self) -> Result<Option<(usize, Token)>, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[self.pos..];
        let Some(c) = rest.chars().next() else {
            return Ok(None);
        };
        let tok = match c {
            '(' => Token::Open,
            ')' => Token::Close,
            '!' => Token::Bang,
            '&' => Token::Amp,
            '|' => Token::Pipe,
            '-' if rest.starts_with("->") => {
                self.pos += 2;
                return Ok(Some((start, Token::Arrow)));
            }
            c if c.is_ascii_alphanumeric() || c == '_' => {
                let len = rest
                    .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_'))
                    .unwrap_or(rest.len());
                self.pos += len;
                return Ok(Some((start, Token::Ident(rest[..len].to_string()))));
            }
            other => {
                return Err(ParseError::Syntax {
                    position: start,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        self.pos += c.len_utf8();
        Ok(Some((start, tok)))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    peeked: Option<Option<(usize, Token)>>,
    universe: &'a [Event],
}

impl<'a> Parser<'a> {
    fn peek(&mut self) -> Result<Option<&(usize, Token)>, ParseError> {
        if self.peeked.is_none() {
            self.peeked = Some(self.lexer.next()?);
        }
        Ok(self.peeked.as_ref().and_then(|t| t.as_ref()))
    }

    fn bump(&mut self) -> Result<Option<(usize, Token)>, ParseError> {
        match self.peeked.take() {
            Some(t) => Ok(t),
            None => self.lexer.next(),
        }
    }

    fn end(&self) -> usize {
        self.lexer.src.len()
    }

    fn expect_close(&mut self) -> Result<(), ParseError> {
        match self.bump()? {
            Some((_, Token::Close)) => Ok(()),
            Some((p, t)) => Err(ParseError::Syntax {
                position: p,
                message: format!("expected `)`, found {t:?}"),
            }),
            None => Err(ParseError::Syntax {
                position: self.end(),
                message: "expected `)`, found end of input".into(),
            }),
        }
    }

    fn atom(&self, position: usize, name: &str) -> Result<Formula, ParseError> {
        let index = name
            .strip_prefix("event")
            .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|d| d.parse::<u32>().ok());
        match index.map(Event) {
            Some(e) if self.universe.contains(&e) => Ok(Formula::Atom(e)),
            _ => Err(ParseError::UnknownAtom {
                position,
                name: name.to_string(),
            }),
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        match self.bump()? {
            None => Err(ParseError::Syntax {
                position: self.end(),
                message: "expected formula, found end of input".into(),
            }),
            Some((p, Token::Ident(name))) => self.atom(p, &name),
            Some((_, Token::Open)) => self.parenthesized(),
            Some((p, t)) => Err(ParseError::Syntax {
                position: p,
                message: format!("expected formula, found {t:?}"),
            }),
        }
    }

    fn parenthesized(&mut self) -> Result<Formula, ParseError> {
        let unary = match self.peek()? {
            Some((_, Token::Bang)) => Some(UnaryOp::Not),
            Some((_, Token::Ident(s))) if s == "X" => Some(UnaryOp::Next),
            Some((_, Token::Ident(s))) if s == "G" => Some(UnaryOp::Always),
            Some((_, Token::Ident(s))) if s == "F" => Some(UnaryOp::Eventually),
            _ => None,
        };
        if let Some(op) = unary {
            self.bump()?;
            let operand = self.formula()?;
            self.expect_close()?;
            return Ok(Formula::unary(op, operand));
        }
        let left = self.formula()?;
        let op = match self.bump()? {
            Some((_, Token::Amp)) => BinaryOp::And,
            Some((_, Token::Pipe)) => BinaryOp::Or,
            Some((_, Token::Arrow)) => BinaryOp::Implies,
            Some((p, t)) => {
                return Err(ParseError::Syntax {
                    position: p,
                    message: format!("expected binary operator, found {t:?}"),
                })
            }
            None => {
                return Err(ParseError::Syntax {
                    position: self.end(),
                    message: "expected binary operator, found end of input".into(),
                })
            }
        };
        let right = self.formula()?;
        self.expect_close()?;
        Ok(Formula::binary(op, left, right))
    }
}

/// Parses the canonical surface syntax, rejecting atoms outside `universe`.
pub fn parse_formula(text: &str, universe: &[Event]) -> Result<Formula, ParseError> {
    let mut parser = Parser {
        lexer: Lexer { src: text, pos: 0 },
        peeked: None,
        universe,
    };
    let f = parser.formula()?;
    if let Some((p, t)) = parser.bump()? {
        return Err(ParseError::Syntax {
            position: p,
            message: format!("trailing input starting with {t:?}"),
        });
    }
    Ok(f)
}

/// Canonical fully parenthesized form.
pub fn print_formula(f: &Formula) -> String {
    f.to_string()
}

impl FromStr for Formula {
    type Err = ParseError;

    /// Parses with a universe just large enough for the indices that appear,
    /// so any `eventN` with `N >= 1` is accepted.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula(s, &universe(scan_max_event(s)))
    }
}

fn scan_max_event(s: &str) -> u32 {
    s.split(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .filter_map(|w| w.strip_prefix("event"))
        .filter_map(|d| d.parse::<u32>().ok())
        .max()
        .unwrap_or(0)
}
