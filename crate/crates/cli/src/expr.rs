//! Arithmetic expressions in the index `n`.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?
//! atom    := number | 'n' | 'e' | 'pi' | 'ln' '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` is right associative and binds tighter than unary minus, so
//! `-n^2 = -(n^2)` and `2^3^2 = 2^9`.

use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    N,
    Neg(Box<Expr>),
    Ln(Box<Expr>),
    Bin(Op, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("column {column}: {message}")]
pub struct ParseError {
    /// 1-based character column.
    pub column: usize,
    pub message: String,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ParseError> {
        let mut p = Parser {
            src,
            chars: src.char_indices().collect(),
            pos: 0,
        };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos < p.chars.len() {
            return Err(p.error(format!("unexpected '{}'", p.chars[p.pos].1)));
        }
        Ok(e)
    }

    pub fn eval(&self, n: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::N => n,
            Expr::Neg(e) => -e.eval(n),
            Expr::Ln(e) => e.eval(n).ln(),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(n), b.eval(n));
                match op {
                    Op::Add => a + b,
                    Op::Sub => a - b,
                    Op::Mul => a * b,
                    Op::Div => a / b,
                    Op::Pow => a.powf(b),
                }
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(Op::Add | Op::Sub, ..) => 1,
            Expr::Bin(Op::Mul | Op::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Bin(Op::Pow, ..) => 4,
            _ => 5,
        }
    }
}

impl FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

/// Canonical form: minimal parentheses, single spaces around `+ - * /`.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |f: &mut fmt::Formatter<'_>, e: &Expr, min: u8| {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            Expr::Num(v) if *v == std::f64::consts::E => write!(f, "e"),
            Expr::Num(v) if *v == std::f64::consts::PI => write!(f, "pi"),
            Expr::Num(v) => write!(f, "{v}"),
            Expr::N => write!(f, "n"),
            Expr::Neg(e) => {
                write!(f, "-")?;
                wrap(f, e, 3)
            }
            Expr::Ln(e) => write!(f, "ln({e})"),
            Expr::Bin(op, a, b) => {
                let (sym, p) = match op {
                    Op::Add => (" + ", 1),
                    Op::Sub => (" - ", 1),
                    Op::Mul => (" * ", 2),
                    Op::Div => (" / ", 2),
                    Op::Pow => ("^", 4),
                };
                if *op == Op::Pow {
                    // right associative: the base needs parens at equal precedence
                    wrap(f, a, p + 1)?;
                    write!(f, "{sym}")?;
                    wrap(f, b, 3)
                } else {
                    wrap(f, a, p)?;
                    write!(f, "{sym}")?;
                    wrap(f, b, p + 1)
                }
            }
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    chars: Vec<(usize, char)>,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            column: self.pos + 1,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].1.is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).map(|c| c.1)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some('+') => Op::Add,
                Some('-') => Op::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some('*') => Op::Mul,
                Some('/') => Op::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat('^') {
            let exp = self.unary()?;
            return Ok(Expr::Bin(Op::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.error("unexpected end of expression")),
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.chars.len() && self.chars[self.pos].1.is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let word = self.slice(start, self.pos).to_string();
                match word.as_str() {
                    "n" => Ok(Expr::N),
                    "e" => Ok(Expr::Num(std::f64::consts::E)),
                    "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                    "ln" => {
                        if !self.eat('(') {
                            return Err(self.error("expected '(' after ln"));
                        }
                        let e = self.expr()?;
                        if !self.eat(')') {
                            return Err(self.error("expected ')'"));
                        }
                        Ok(Expr::Ln(Box::new(e)))
                    }
                    _ => {
                        self.pos = start;
                        Err(self.error(format!("unknown identifier '{word}'")))
                    }
                }
            }
            Some(c) => Err(self.error(format!("unexpected '{c}'"))),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.chars.len() && p.chars[p.pos].1.is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.pos < self.chars.len() && self.chars[self.pos].1 == '.' {
            self.pos += 1;
            digits(self);
        }
        if self.pos < self.chars.len() && matches!(self.chars[self.pos].1, 'e' | 'E') {
            // exponent only when digits follow, so `2e` stays a parse error
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.chars.len() && matches!(self.chars[self.pos].1, '+' | '-') {
                self.pos += 1;
            }
            let before = self.pos;
            digits(self);
            if self.pos == before {
                self.pos = save;
            }
        }
        let text = self.slice(start, self.pos);
        text.parse::<f64>().map(Expr::Num).map_err(|_| {
            let mut e = self.error(format!("invalid number '{text}'"));
            e.column = start + 1;
            e
        })
    }

    fn slice(&self, from: usize, to: usize) -> &str {
        let a = self.chars[from].0;
        let b = self.chars.get(to).map_or(self.src.len(), |c| c.0);
        &self.src[a..b]
    }
}
