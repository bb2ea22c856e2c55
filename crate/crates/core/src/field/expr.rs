//! Arithmetic expressions over the state variables `x1, x2, x3`.
//!
//! Grammar:
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor ('*' factor)*
//! factor := base ('^' uint)?
//! base   := number | 'x1' | 'x2' | 'x3' | '(' expr ')' | '-' base
//! number := int ('/' uint)? | decimal
//! ```
//!
//! Numeric literals are stored as exact rationals and converted to `f64`
//! only at evaluation time, so `23/100` and `0.23` denote the same constant.
//! Note that `-x2^2` parses as `(-x2)^2` because unary minus binds inside
//! `base`.

use std::fmt;

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedMul, CheckedSub};
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

pub type Rational = Ratio<i64>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("numeric literal `{text}` at position {pos} does not fit a 64-bit rational")]
    Overflow { pos: usize, text: String },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { pos, .. }
            | ParseError::UnknownIdentifier { pos, .. }
            | ParseError::Overflow { pos, .. } => *pos,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(Rational),
    /// State variable, zero-based (`x1` is `Var(0)`).
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ParseError> {
        let mut p = Parser { src, pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos < src.len() {
            return Err(p.syntax("unexpected trailing input"));
        }
        Ok(e)
    }

    pub fn constant(value: Rational) -> Expr {
        Expr::Const(value)
    }

    pub fn var(index: usize) -> Expr {
        assert!(index < 3, "state has three coordinates");
        Expr::Var(index)
    }

    pub fn eval(&self, x: &[f64; 3]) -> f64 {
        match self {
            Expr::Const(r) => rational_to_f64(r),
            Expr::Var(i) => x[*i],
            Expr::Neg(a) => -a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Pow(a, n) => powu(a.eval(x), *n),
        }
    }

    /// True when the expression is the literal zero (after folding constants).
    pub fn is_zero(&self) -> bool {
        matches!(self.fold_const(), Some(r) if r.is_zero())
    }

    /// Value of a variable-free expression, computed exactly.
    pub fn fold_const(&self) -> Option<Rational> {
        match self {
            Expr::Const(r) => Some(*r),
            Expr::Var(_) => None,
            Expr::Neg(a) => a.fold_const().map(|r| -r),
            Expr::Add(a, b) => a.fold_const()?.checked_add(&b.fold_const()?),
            Expr::Sub(a, b) => a.fold_const()?.checked_sub(&b.fold_const()?),
            Expr::Mul(a, b) => a.fold_const()?.checked_mul(&b.fold_const()?),
            Expr::Pow(a, n) => {
                let base = a.fold_const()?;
                let mut acc = Rational::from_integer(1);
                for _ in 0..*n {
                    acc = acc.checked_mul(&base)?;
                }
                Some(acc)
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) => 2,
            Expr::Pow(..) => 3,
            Expr::Neg(_) => 4,
            Expr::Const(r) if !r.is_integer() || *r.numer() < 0 => 2,
            Expr::Const(_) | Expr::Var(_) => 5,
        }
    }
}

fn powu(base: f64, n: u32) -> f64 {
    match i32::try_from(n) {
        Ok(k) => base.powi(k),
        Err(_) => base.powf(n as f64),
    }
}

pub(crate) fn rational_to_f64(r: &Rational) -> f64 {
    // Both halves are exact in f64 up to 2^53; a single division then rounds once.
    let (n, d) = (*r.numer(), *r.denom());
    if n.unsigned_abs() < (1u64 << 53) && d.unsigned_abs() < (1u64 << 53) {
        n as f64 / d as f64
    } else {
        r.to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Every printed form re-parses to the same tree shape up to
        // associativity, which is all evaluation depends on.
        fn wrap(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
            if e.precedence() < min_prec {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::Const(r) => {
                if *r.numer() < 0 {
                    write!(f, "-")?;
                }
                write!(f, "{}", r.numer().unsigned_abs())?;
                if !r.is_integer() {
                    write!(f, "/{}", r.denom())?;
                }
                Ok(())
            }
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => {
                write!(f, "-")?;
                wrap(f, a, 5)
            }
            Expr::Add(a, b) => {
                wrap(f, a, 1)?;
                write!(f, " + ")?;
                wrap(f, b, 2)
            }
            Expr::Sub(a, b) => {
                wrap(f, a, 1)?;
                write!(f, " - ")?;
                wrap(f, b, 2)
            }
            Expr::Mul(a, b) => {
                wrap(f, a, 2)?;
                write!(f, "*")?;
                wrap(f, b, 3)
            }
            Expr::Pow(a, n) => {
                wrap(f, a, 5)?;
                write!(f, "^{n}")
            }
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn syntax(&self, msg: &str) -> ParseError {
        ParseError::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.as_bytes().get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
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
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        while self.eat(b'*') {
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if self.eat(b'^') {
            self.skip_ws();
            let start = self.pos;
            let digits = self.digits();
            if digits.is_empty() {
                return Err(self.syntax("expected non-negative integer exponent"));
            }
            let n: u32 = digits.parse().map_err(|_| ParseError::Overflow {
                pos: start,
                text: digits.to_string(),
            })?;
            return Ok(Expr::Pow(Box::new(base), n));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.syntax("expected `)`"));
                }
                Ok(e)
            }
            Some(b'-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.base()?)))
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(_) => Err(self.syntax("unexpected character")),
            None => Err(self.syntax("unexpected end of input")),
        }
    }

    fn digits(&mut self) -> &'a str {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        &self.src[start..self.pos]
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let int_part = self.digits();
        let overflow = |p: &Self| ParseError::Overflow {
            pos: start,
            text: p.src[start..p.pos].to_string(),
        };
        if self.peek() == Some(b'.') {
            self.pos += 1;
            let frac = self.digits();
            if int_part.is_empty() && frac.is_empty() {
                return Err(ParseError::Syntax {
                    pos: start,
                    msg: "malformed decimal literal".into(),
                });
            }
            let scale = 10i64
                .checked_pow(frac.len() as u32)
                .ok_or_else(|| overflow(self))?;
            let whole: i64 = if int_part.is_empty() {
                0
            } else {
                int_part.parse().map_err(|_| overflow(self))?
            };
            let f: i64 = if frac.is_empty() {
                0
            } else {
                frac.parse().map_err(|_| overflow(self))?
            };
            let numer = whole
                .checked_mul(scale)
                .and_then(|w| w.checked_add(f))
                .ok_or_else(|| overflow(self))?;
            return Ok(Expr::Const(Rational::new(numer, scale)));
        }
        let numer: i64 = int_part.parse().map_err(|_| overflow(self))?;
        // Only `int '/' uint` forms a literal; lookahead keeps `/` out of the
        // operator set.
        let save = self.pos;
        self.skip_ws();
        if self.peek() == Some(b'/') {
            self.pos += 1;
            self.skip_ws();
            let den_start = self.pos;
            let den = self.digits();
            if den.is_empty() {
                return Err(self.syntax("expected integer denominator"));
            }
            let denom: i64 = den.parse().map_err(|_| overflow(self))?;
            if denom == 0 {
                return Err(ParseError::Syntax {
                    pos: den_start,
                    msg: "zero denominator".into(),
                });
            }
            return Ok(Expr::Const(Rational::new(numer, denom)));
        }
        self.pos = save;
        Ok(Expr::Const(Rational::from_integer(numer)))
    }

    fn ident(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
            self.pos += 1;
        }
        match &self.src[start..self.pos] {
            "x1" => Ok(Expr::Var(0)),
            "x2" => Ok(Expr::Var(1)),
            "x3" => Ok(Expr::Var(2)),
            name => Err(ParseError::UnknownIdentifier {
                pos: start,
                name: name.to_string(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, x: [f64; 3]) -> f64 {
        Expr::parse(s).unwrap().eval(&x)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 - 2 - 3", [0.0; 3]), -4.0);
        assert_eq!(ev("2*3+4", [0.0; 3]), 10.0);
        assert_eq!(ev("2+3*4", [0.0; 3]), 14.0);
        assert_eq!(ev("x1^2*x2", [3.0, 2.0, 0.0]), 18.0);
        assert_eq!(ev("(x1+x2)^2", [1.0, 2.0, 0.0]), 9.0);
    }

    #[test]
    fn unary_minus_binds_inside_base() {
        assert_eq!(ev("-x2^2", [0.0, 3.0, 0.0]), 9.0);
        assert_eq!(ev("-(x2^2)", [0.0, 3.0, 0.0]), -9.0);
        assert_eq!(ev("--x1", [2.0, 0.0, 0.0]), 2.0);
    }

    #[test]
    fn rational_and_decimal_literals_agree() {
        let a = Expr::parse("23/100").unwrap();
        let b = Expr::parse("0.23").unwrap();
        assert_eq!(a.fold_const(), b.fold_const());
        assert_eq!(a.eval(&[0.0; 3]), 0.23);
        assert_eq!(ev("3/10*x2", [0.0, 1.0, 0.0]), 0.3);
        assert_eq!(ev(".5", [0.0; 3]), 0.5);
        assert_eq!(ev("2.", [0.0; 3]), 2.0);
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = Expr::parse("x1 + * x2").unwrap_err();
        assert_eq!(err.position(), 5);
        let err = Expr::parse("(x1 + x2").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { pos: 8, .. }));
        let err = Expr::parse("x1 x2").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { pos: 3, .. }));
        assert!(Expr::parse("").is_err());
        assert!(Expr::parse("1/0").is_err());
        assert!(Expr::parse("x1^-1").is_err());
        assert!(Expr::parse("x1/2").is_err());
    }

    #[test]
    fn unknown_identifier() {
        let err = Expr::parse("x1 + y").unwrap_err();
        assert_eq!(
            err,
            ParseError::UnknownIdentifier {
                pos: 5,
                name: "y".into()
            }
        );
        assert!(matches!(
            Expr::parse("x4").unwrap_err(),
            ParseError::UnknownIdentifier { .. }
        ));
    }

    #[test]
    fn overflowing_literal_is_rejected() {
        assert!(matches!(
            Expr::parse("99999999999999999999").unwrap_err(),
            ParseError::Overflow { pos: 0, .. }
        ));
    }

    #[test]
    fn display_reparses() {
        for s in [
            "-x2",
            "1+x1",
            "-7/5",
            "2/5*x1 + 1/10*x2 - 1",
            "3/10*x2 - 1/5*x2*x3 - 2/5",
            "-(x2^2)",
            "(-x2)^3",
            "x1 - (x2 - x3)",
            "(x1*x2)^2*-x3",
        ] {
            let e = Expr::parse(s).unwrap();
            let printed = e.to_string();
            let back = Expr::parse(&printed)
                .unwrap_or_else(|err| panic!("{s} printed as {printed}: {err}"));
            let x = [0.7, -1.3, 2.1];
            assert_eq!(e.eval(&x), back.eval(&x), "{s} -> {printed}");
        }
    }
}
