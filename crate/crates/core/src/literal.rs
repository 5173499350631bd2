//! Parser for the polynomial and multivector literal syntax.
//!
//! Grammar (whitespace insensitive):
//!
//! ```text
//! expr   := ['-'] term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor | factor)*      juxtaposition multiplies
//! factor := atom ('^' (integer | atom))*               '^' before a non-integer is a wedge
//! atom   := integer | name | 'd'name | '(' expr ')' | '(' expr ',' expr ')'
//! ```
//!
//! `(a,b)` is the Gaussian rational `a + b i`; `d<name>` is the coordinate
//! direction `∂_<name>`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::coeffring::{GaussianRational, PolyFun};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(GaussianRational),
    Var(usize),
    Dir(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>, Pos),
    Neg(Box<Expr>),
    Pow(Box<Expr>, u32),
}

/// 1-based line and column of a token.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl Pos {
    pub fn error(self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            column: self.column,
            message: message.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

fn lex(text: &str, origin: Pos) -> Result<Vec<(Tok, Pos)>> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut line = origin.line;
    let mut col = origin.column;
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, column: col };
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            out.push((Tok::Int(s.parse().expect("digits")), pos));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            out.push((Tok::Ident(s), pos));
            continue;
        }
        let tok = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            other => return Err(pos.error(format!("unexpected character '{other}'"))),
        };
        out.push((tok, pos));
        i += 1;
        col += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    names: &'a [String],
    end: Pos,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn pos(&self) -> Pos {
        self.toks.get(self.at).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|(t, _)| t.clone());
        self.at += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        let pos = self.pos();
        match self.bump() {
            Some(t) if t == want => Ok(()),
            _ => Err(pos.error(format!("expected {what}"))),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = if self.peek() == Some(&Tok::Minus) {
            self.bump();
            Expr::Neg(Box::new(self.term()?))
        } else {
            self.term()?
        };
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some(Tok::Slash) => {
                    self.bump();
                    let pos = self.pos();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?), pos);
                }
                Some(Tok::Int(_)) | Some(Tok::Ident(_)) | Some(Tok::LParen) => {
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        let mut base = self.atom()?;
        while self.peek() == Some(&Tok::Caret) {
            self.bump();
            let pos = self.pos();
            match self.peek() {
                Some(Tok::Int(n)) => {
                    let n: u32 = n
                        .try_into()
                        .map_err(|_| pos.error("exponent too large"))?;
                    self.bump();
                    base = Expr::Pow(Box::new(base), n);
                }
                _ => {
                    let rhs = self.atom()?;
                    base = Expr::Mul(Box::new(base), Box::new(rhs));
                }
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let pos = self.pos();
        match self.bump() {
            Some(Tok::Int(n)) => Ok(Expr::Num(GaussianRational::from_rational(
                BigRational::from_integer(n),
            ))),
            Some(Tok::Ident(name)) => self.ident(&name, pos),
            Some(Tok::LParen) => {
                let first = self.expr()?;
                if self.peek() == Some(&Tok::Comma) {
                    self.bump();
                    let second = self.expr()?;
                    self.expect(Tok::RParen, "')' closing complex literal")?;
                    let re = constant_value(&first, pos)?;
                    let im = constant_value(&second, pos)?;
                    if !re.is_real() || !im.is_real() {
                        return Err(pos.error("complex literal parts must be real"));
                    }
                    Ok(Expr::Num(GaussianRational::new(re.re, im.re)))
                } else {
                    self.expect(Tok::RParen, "')'")?;
                    Ok(first)
                }
            }
            Some(_) => Err(pos.error("expected a number, variable or '('")),
            None => Err(pos.error("unexpected end of expression")),
        }
    }

    fn ident(&self, name: &str, pos: Pos) -> Result<Expr> {
        if let Some(i) = lookup(self.names, name) {
            return Ok(Expr::Var(i));
        }
        if name == "i" {
            return Ok(Expr::Num(GaussianRational::i()));
        }
        if let Some(rest) = name.strip_prefix('d') {
            if let Some(i) = lookup(self.names, rest) {
                return Ok(Expr::Dir(i));
            }
        }
        Err(pos.error(format!("unknown identifier '{name}'")))
    }
}

/// Resolves a variable name: an explicit name or the generic `x<k>` form.
fn lookup(names: &[String], name: &str) -> Option<usize> {
    if let Some(i) = names.iter().position(|n| n == name) {
        return Some(i);
    }
    let k: usize = name.strip_prefix('x')?.parse().ok()?;
    (1..=names.len()).contains(&k).then(|| k - 1)
}

fn constant_value(e: &Expr, pos: Pos) -> Result<GaussianRational> {
    let p = to_poly(e, 0)?;
    if !p.is_constant() {
        return Err(pos.error("expected a constant"));
    }
    Ok(p.constant_term())
}

/// Parses `text` into an expression tree. `origin` is the position of the
/// first character, used for error reporting.
pub fn parse_expr(text: &str, names: &[String], origin: Pos) -> Result<Expr> {
    let toks = lex(text, origin)?;
    let end = Pos {
        line: origin.line,
        column: origin.column + text.len(),
    };
    let mut p = Parser {
        toks,
        at: 0,
        names,
        end,
    };
    if p.peek().is_none() {
        return Err(origin.error("empty expression"));
    }
    let e = p.expr()?;
    if p.at < p.toks.len() {
        return Err(p.pos().error("unexpected trailing input"));
    }
    Ok(e)
}

/// Evaluates an expression with no direction atoms to a polynomial.
pub fn to_poly(e: &Expr, dim: usize) -> Result<PolyFun> {
    Ok(match e {
        Expr::Num(c) => PolyFun::constant(dim, c.clone()),
        Expr::Var(i) => PolyFun::var(dim, *i),
        Expr::Dir(_) => return Err(Pos::default().error("direction not allowed in a function")),
        Expr::Add(a, b) => to_poly(a, dim)? + to_poly(b, dim)?,
        Expr::Sub(a, b) => to_poly(a, dim)? - to_poly(b, dim)?,
        Expr::Mul(a, b) => to_poly(a, dim)? * to_poly(b, dim)?,
        Expr::Neg(a) => -to_poly(a, dim)?,
        Expr::Pow(a, n) => to_poly(a, dim)?.pow(*n),
        Expr::Div(a, b, pos) => {
            let den = to_poly(b, dim)?;
            if !den.is_constant() || den.constant_term().is_zero() {
                return Err(pos.error("division only by a nonzero constant"));
            }
            let inv = den.constant_term().inv().expect("nonzero");
            to_poly(a, dim)?.scale(&inv)
        }
    })
}

/// Parses a polynomial literal such as `3/2*x1^2*x2 + (0,1)*x3`.
pub fn parse_poly(text: &str, names: &[String]) -> Result<PolyFun> {
    parse_poly_at(text, names, Pos { line: 1, column: 1 })
}

pub fn parse_poly_at(text: &str, names: &[String], origin: Pos) -> Result<PolyFun> {
    let e = parse_expr(text, names, origin)?;
    if contains_dir(&e) {
        return Err(origin.error("direction not allowed in a function literal"));
    }
    to_poly(&e, names.len()).map_err(|err| match err {
        Error::Parse { line: 0, message, .. } => origin.error(message),
        other => other,
    })
}

pub(crate) fn contains_dir(e: &Expr) -> bool {
    match e {
        Expr::Dir(_) => true,
        Expr::Num(_) | Expr::Var(_) => false,
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b, _) => {
            contains_dir(a) || contains_dir(b)
        }
        Expr::Neg(a) | Expr::Pow(a, _) => contains_dir(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffring::Monomial;

    fn names(d: usize) -> Vec<String> {
        crate::coeffring::default_names(d)
    }

    #[test]
    fn parses_spec_literal() {
        let p = parse_poly("3/2*x1^2*x2 + (0,1)*x3", &names(3)).unwrap();
        assert_eq!(p.coeff(&Monomial(vec![2, 1, 0])), GaussianRational::from_ratio(3, 2));
        assert_eq!(p.coeff(&Monomial(vec![0, 0, 1])), GaussianRational::i());
        assert_eq!(p.len(), 2);
        assert_eq!(p.to_string(), "3/2*x1^2*x2 + (0,1)*x3");
    }

    #[test]
    fn named_variables_and_juxtaposition() {
        let n: Vec<String> = ["x", "y"].iter().map(|s| s.to_string()).collect();
        let p = parse_poly("(1/2)x - 2 y^2 + 1", &n).unwrap();
        let q = parse_poly("1/2*x1 - 2*x2^2 + 1", &n).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn malformed_literal_is_positioned() {
        let err = parse_poly("x1 + * x2", &names(2)).unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                line: 1,
                column: 6,
                message: "expected a number, variable or '('".into()
            }
        );
        assert!(matches!(parse_poly("x1 + x9", &names(2)), Err(Error::Parse { column: 6, .. })));
        assert!(matches!(parse_poly("x1 / x2", &names(2)), Err(Error::Parse { .. })));
    }
}
