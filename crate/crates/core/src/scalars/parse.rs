//! Recursive-descent parser for polynomial expressions such as `3/2*z1^2*zb1 - i*t`.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::Zero;

use super::exact::{ExactScalar, Rational};
use super::poly::{Poly, VarSet};
use super::ScalarError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigInt),
    Ident(String),
    Op(char),
}

fn lex(s: &str) -> Result<Vec<Tok>, ScalarError> {
    let mut out = Vec::new();
    let cs: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < cs.len() {
        let c = cs[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let st = i;
            while i < cs.len() && cs[i].is_ascii_digit() {
                i += 1;
            }
            let txt: String = cs[st..i].iter().collect();
            out.push(Tok::Num(txt.parse().expect("digits")));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let st = i;
            while i < cs.len() && (cs[i].is_ascii_alphanumeric() || cs[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(cs[st..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(ScalarError::Parse(format!("unexpected character {c:?}")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    vars: &'a Arc<VarSet>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Poly, ScalarError> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = &acc + &self.term()?;
            } else if self.eat('-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Poly, ScalarError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = &acc * &self.unary()?;
            } else if self.eat('/') {
                let d = self.unary()?;
                let c = d.as_constant().ok_or_else(|| ScalarError::Parse("division by a non-constant".into()))?;
                acc = acc.scale(&c.inv()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Poly, ScalarError> {
        if self.eat('-') {
            return Ok(-&self.unary()?);
        }
        if self.eat('+') {
            return self.unary();
        }
        let base = self.atom()?;
        if self.eat('^') {
            match self.toks.get(self.pos).cloned() {
                Some(Tok::Num(e)) => {
                    self.pos += 1;
                    let e: u32 = e.try_into().map_err(|_| ScalarError::Parse("exponent too large".into()))?;
                    Ok(base.pow(e))
                }
                _ => Err(ScalarError::Parse("expected a non-negative integer exponent".into())),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Poly, ScalarError> {
        match self.toks.get(self.pos).cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Poly::constant(self.vars, ExactScalar::real(Rational::from_integer(v))))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if let Some(i) = self.vars.index_of(&name) {
                    Ok(Poly::var(self.vars, i))
                } else if name == "i" {
                    Ok(Poly::constant(self.vars, ExactScalar::i()))
                } else {
                    Err(ScalarError::Parse(format!("unknown variable {name:?}")))
                }
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(ScalarError::Parse("expected ')'".into()));
                }
                Ok(e)
            }
            other => Err(ScalarError::Parse(format!("unexpected token {other:?}"))),
        }
    }
}

/// Parses a polynomial over `vars`. `i` denotes the imaginary unit unless it names a variable.
pub fn parse_poly(s: &str, vars: &Arc<VarSet>) -> Result<Poly, ScalarError> {
    let toks = lex(s)?;
    if toks.is_empty() {
        return Err(ScalarError::Parse("empty expression".into()));
    }
    let mut p = Parser { toks, pos: 0, vars };
    let out = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(ScalarError::Parse(format!("trailing input at token {}", p.pos)));
    }
    Ok(out)
}

/// Parses a Gaussian rational such as `3/4`, `-i`, or `(1/2 - 2*i)`.
pub fn parse_scalar(s: &str) -> Result<ExactScalar, ScalarError> {
    let empty = VarSet::new(Vec::new(), Vec::new());
    let p = parse_poly(s, &empty)?;
    let c = p.as_constant().expect("no variables");
    debug_assert!(!c.re.is_zero() || !c.im.is_zero() || p.is_zero());
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_gaussian_coefficients() {
        let v = VarSet::heisenberg(1);
        let p = parse_poly("(1+i)*z1*zb1 + t^2/3", &v).unwrap();
        let z = Poly::var(&v, 0);
        let zb = Poly::var(&v, 1);
        let t = Poly::var(&v, 2);
        let expect = &(&z * &zb).scale(&ExactScalar::new(super::super::exact::rat(1, 1), super::super::exact::rat(1, 1)))
            + &t.pow(2).scale(&ExactScalar::frac(1, 3));
        assert_eq!(p, expect);
    }

    #[test]
    fn rejects_garbage() {
        let v = VarSet::heisenberg(1);
        assert!(parse_poly("z1 +", &v).is_err());
        assert!(parse_poly("w3", &v).is_err());
        assert!(parse_poly("z1/zb1", &v).is_err());
        assert!(parse_poly("z1 $ 2", &v).is_err());
    }

    #[test]
    fn scalar_forms() {
        assert_eq!(parse_scalar("-3/4").unwrap(), ExactScalar::frac(-3, 4));
        assert_eq!(parse_scalar("(1/2-2*i)").unwrap(), ExactScalar::new(super::super::exact::rat(1, 2), super::super::exact::rat(-2, 1)));
    }
}
