//! Minimal arithmetic-expression interpreter for ad-hoc potentials.
//!
//! Grammar: `+ - * / ^`, unary minus, parentheses, the variable `x`, the
//! imaginary unit `i`, the constant `pi`, float literals, and the functions
//! `exp`, `sin`, `cos`. Everything evaluates over complex numbers.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub enum Expr {
    Const(Complex64),
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Exp(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
}

impl Expr {
    pub fn eval(&self, x: f64) -> Complex64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var => Complex64::new(x, 0.0),
            Expr::Neg(e) => -e.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => a.eval(x).powc(b.eval(x)),
            Expr::Exp(e) => e.eval(x).exp(),
            Expr::Sin(e) => e.eval(x).sin(),
            Expr::Cos(e) => e.eval(x).cos(),
        }
    }

    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser {
            chars: src.chars().collect(),
            pos: 0,
            src,
        };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.chars.len() {
            return Err(p.err("trailing input"));
        }
        Ok(e)
    }
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    src: &'a str,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Schema(format!(
            "expression '{}': {} at position {}",
            self.src, msg, self.pos
        ))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some('+') => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some('-') => {
                    self.pos += 1;
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
                Some('*') => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some('/') => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.unary()?;
        if self.peek() == Some('^') {
            self.pos += 1;
            // right-associative
            let exp = self.factor()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek() == Some('-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            _ => Err(self.err("expected a value")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len() {
            let c = self.chars[self.pos];
            if c.is_ascii_digit() || c == '.' {
                self.pos += 1;
            } else if (c == 'e' || c == 'E')
                && self.pos > start
                && self
                    .chars
                    .get(self.pos + 1)
                    .is_some_and(|&n| n.is_ascii_digit() || n == '+' || n == '-')
            {
                self.pos += 2;
            } else {
                break;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        let v: f64 = text.parse().map_err(|_| self.err("bad number"))?;
        Ok(Expr::Const(Complex64::new(v, 0.0)))
    }

    fn ident(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name: String = self.chars[start..self.pos].iter().collect();
        match name.as_str() {
            "x" => Ok(Expr::Var),
            "i" => Ok(Expr::Const(Complex64::new(0.0, 1.0))),
            "pi" => Ok(Expr::Const(Complex64::new(std::f64::consts::PI, 0.0))),
            "exp" | "sin" | "cos" => {
                if self.peek() != Some('(') {
                    return Err(self.err("expected '(' after function name"));
                }
                self.pos += 1;
                let arg = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(match name.as_str() {
                    "exp" => Expr::Exp(Box::new(arg)),
                    "sin" => Expr::Sin(Box::new(arg)),
                    _ => Expr::Cos(Box::new(arg)),
                })
            }
            _ => Err(self.err(&format!("unknown identifier '{name}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(src: &str, x: f64) -> Complex64 {
        Expr::parse(src).unwrap().eval(x)
    }

    #[test]
    fn basics() {
        assert_eq!(ev("2+3*4", 0.0), Complex64::new(14.0, 0.0));
        assert_eq!(ev("-(1+i)*2", 0.0), Complex64::new(-2.0, -2.0));
        assert!((ev("exp(-x)", 2.0).re - (-2.0f64).exp()).abs() < 1e-15);
        assert!((ev("sin(pi/2)", 0.0).re - 1.0).abs() < 1e-15);
        assert!((ev("2^3^1", 0.0).re - 8.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_garbage() {
        assert!(Expr::parse("2+").is_err());
        assert!(Expr::parse("foo(x)").is_err());
        assert!(Expr::parse("(1+2").is_err());
    }

    proptest! {
        #[test]
        fn matches_closure(a in -5.0f64..5.0, b in -5.0f64..5.0, x in 0.0f64..20.0) {
            let src = format!("({a})*exp(-x/2) + ({b})*cos(x)");
            let want = Complex64::new(a * (-x / 2.0).exp() + b * x.cos(), 0.0);
            let got = ev(&src, x);
            prop_assert!((got - want).norm() <= 1e-12 * (1.0 + want.norm()));
        }
    }
}
