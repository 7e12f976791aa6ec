//! Text syntax for potentials and bundle metrics.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' integer)?
//! atom  := number | 'i' | variable | func '(' expr (',' integer)? ')' | '(' expr ')'
//! func  := log | ln | conj | pow
//! ```
//!
//! Variables are `z1..zn` (base), `t1..tr` (fiber) and the generic `w1..wN`.

use thiserror::Error;

use crate::C64;

use super::Expr;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("at column {column} of `{input}`: {message}")]
pub struct ParseError {
    pub input: String,
    pub column: usize,
    pub message: String,
}

/// Maps variable names onto zero-based coordinate indices.
#[derive(Clone, Copy, Debug)]
pub struct VarNames {
    pub base_dim: usize,
    pub fiber_dim: usize,
}

impl VarNames {
    pub fn new(base_dim: usize, fiber_dim: usize) -> Self {
        Self { base_dim, fiber_dim }
    }

    fn resolve(&self, name: &str) -> Option<usize> {
        let (prefix, digits) = name.split_at(1);
        let k: usize = digits.parse().ok()?;
        if k == 0 {
            return None;
        }
        match prefix {
            "z" if k <= self.base_dim => Some(k - 1),
            "t" if k <= self.fiber_dim => Some(self.base_dim + k - 1),
            "w" if k <= self.base_dim + self.fiber_dim => Some(k - 1),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

struct Parser<'a> {
    input: &'a str,
    toks: Vec<(usize, Tok)>,
    pos: usize,
    names: VarNames,
}

pub fn parse_expr(input: &str, names: VarNames) -> Result<Expr, ParseError> {
    let toks = lex(input)?;
    let mut p = Parser {
        input,
        toks,
        pos: 0,
        names,
    };
    let e = p.expr()?;
    if let Some((col, t)) = p.toks.get(p.pos) {
        return Err(p.err(*col, format!("unexpected trailing token {t:?}")));
    }
    Ok(e)
}

fn lex(input: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = input.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && ((bytes[i] as char).is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let save = i;
                i += 1;
                if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
                    i += 1;
                }
                if i < bytes.len() && bytes[i].is_ascii_digit() {
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    i = save;
                }
            }
            let text = &input[start..i];
            let v: f64 = text.parse().map_err(|_| ParseError {
                input: input.to_string(),
                column: start + 1,
                message: format!("bad number `{text}`"),
            })?;
            out.push((start + 1, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start + 1, Tok::Ident(input[start..i].to_string())));
        } else if "+-*/^(),".contains(c) {
            out.push((i + 1, Tok::Op(c)));
            i += 1;
        } else {
            return Err(ParseError {
                input: input.to_string(),
                column: i + 1,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

impl Parser<'_> {
    fn err(&self, column: usize, message: String) -> ParseError {
        ParseError {
            input: self.input.to_string(),
            column,
            message,
        }
    }

    fn column(&self) -> usize {
        self.toks.get(self.pos).map(|(c, _)| *c).unwrap_or(self.input.len() + 1)
    }

    fn peek_op(&self) -> Option<char> {
        match self.toks.get(self.pos) {
            Some((_, Tok::Op(c))) => Some(*c),
            _ => None,
        }
    }

    fn expect(&mut self, op: char) -> Result<(), ParseError> {
        if self.peek_op() == Some(op) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(self.column(), format!("expected `{op}`")))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.term()?];
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let t = self.term()?;
            terms.push(if op == '-' { -t } else { t });
        }
        Ok(Expr::sum(terms))
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut factors = vec![self.unary()?];
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let f = self.unary()?;
            factors.push(if op == '/' { f.recip() } else { f });
        }
        Ok(Expr::product(factors))
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek_op() == Some('-') {
            self.pos += 1;
            return Ok(-self.unary()?);
        }
        self.power()
    }

    fn integer(&mut self) -> Result<i32, ParseError> {
        let col = self.column();
        let neg = if self.peek_op() == Some('-') {
            self.pos += 1;
            true
        } else {
            false
        };
        match self.toks.get(self.pos) {
            Some((_, Tok::Num(v))) if v.fract() == 0.0 && v.abs() < 1e6 => {
                self.pos += 1;
                let k = *v as i32;
                Ok(if neg { -k } else { k })
            }
            _ => Err(self.err(col, "expected an integer exponent".into())),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let k = self.integer()?;
            return Ok(base.powi(k));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let col = self.column();
        let Some((_, tok)) = self.toks.get(self.pos).cloned() else {
            return Err(self.err(col, "unexpected end of input".into()));
        };
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Expr::real(v)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Op(c) => Err(self.err(col, format!("unexpected `{c}`"))),
            Tok::Ident(name) => match name.as_str() {
                "i" => Ok(Expr::constant(C64::new(0.0, 1.0))),
                "log" | "ln" | "conj" => {
                    self.expect('(')?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    Ok(if name == "conj" { arg.conj() } else { arg.ln() })
                }
                "pow" => {
                    self.expect('(')?;
                    let arg = self.expr()?;
                    self.expect(',')?;
                    let k = self.integer()?;
                    self.expect(')')?;
                    Ok(arg.powi(k))
                }
                _ => self
                    .names
                    .resolve(&name)
                    .map(Expr::var)
                    .ok_or_else(|| self.err(col, format!("unknown identifier `{name}`"))),
            },
        }
    }
}
