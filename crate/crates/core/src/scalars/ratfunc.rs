//! Rational functions kept in lowest terms with a monic denominator.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_traits::Zero;

use super::exact::ExactScalar;
use super::gcd::gcd;
use super::poly::{Poly, VarSet};
use super::ScalarError;

/// `num / den` with `gcd(num, den) = 1` and `den` monic in lex order.
#[derive(Clone, PartialEq, Eq)]
pub struct RatFunc {
    num: Poly,
    den: Poly,
}

impl RatFunc {
    pub fn new(num: Poly, den: Poly) -> Result<Self, ScalarError> {
        if den.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        Ok(Self::normalize(num, den))
    }

    fn normalize(num: Poly, den: Poly) -> Self {
        if num.is_zero() {
            return Self::from_poly(Poly::zero(den.vars()));
        }
        let g = gcd(&num, &den);
        let (mut num, mut den) =
            if g.is_constant() { (num, den) } else { (num.exact_div(&g).expect("gcd divides"), den.exact_div(&g).expect("gcd divides")) };
        let lc = den.leading().expect("nonzero").1.clone();
        if !num_traits::One::is_one(&lc) {
            let inv = lc.inv().expect("nonzero");
            num = num.scale(&inv);
            den = den.scale(&inv);
        }
        Self { num, den }
    }

    pub fn from_poly(p: Poly) -> Self {
        let den = Poly::one(p.vars());
        Self { num: p, den }
    }

    pub fn zero(vars: &Arc<VarSet>) -> Self {
        Self::from_poly(Poly::zero(vars))
    }

    pub fn one(vars: &Arc<VarSet>) -> Self {
        Self::from_poly(Poly::one(vars))
    }

    pub fn constant(vars: &Arc<VarSet>, c: ExactScalar) -> Self {
        Self::from_poly(Poly::constant(vars, c))
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn vars(&self) -> &Arc<VarSet> {
        self.num.vars()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_constant()
    }

    /// The polynomial value, if the denominator is trivial.
    pub fn as_poly(&self) -> Option<Poly> {
        self.is_polynomial().then(|| self.num.clone())
    }

    pub fn inv(&self) -> Result<Self, ScalarError> {
        Self::new(self.den.clone(), self.num.clone())
    }

    pub fn checked_div(&self, o: &Self) -> Result<Self, ScalarError> {
        Ok(self * &o.inv()?)
    }

    pub fn scale(&self, c: &ExactScalar) -> Self {
        if c.is_zero() {
            return Self::zero(self.vars());
        }
        Self { num: self.num.scale(c), den: self.den.clone() }
    }

    pub fn pow(&self, e: i32) -> Result<Self, ScalarError> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        Ok(Self::normalize(base.num.pow(e.unsigned_abs()), base.den.pow(e.unsigned_abs())))
    }

    pub fn derivative(&self, i: usize) -> Self {
        let num = &(&self.num.derivative(i) * &self.den) - &(&self.num * &self.den.derivative(i));
        Self::normalize(num, self.den.pow(2))
    }

    pub fn conj(&self) -> Self {
        Self::normalize(self.num.conj(), self.den.conj())
    }

    pub fn compose(&self, images: &[Poly]) -> Result<Self, ScalarError> {
        Self::new(self.num.compose(images), self.den.compose(images))
    }
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_polynomial() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}

impl fmt::Debug for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl<'a> Add<&'a RatFunc> for &'a RatFunc {
    type Output = RatFunc;
    fn add(self, o: &RatFunc) -> RatFunc {
        if self.den == o.den {
            return RatFunc::normalize(&self.num + &o.num, self.den.clone());
        }
        let g = gcd(&self.den, &o.den);
        let a = o.den.exact_div(&g).expect("gcd divides");
        let b = self.den.exact_div(&g).expect("gcd divides");
        RatFunc::normalize(&(&self.num * &a) + &(&o.num * &b), &self.den * &a)
    }
}

impl<'a> Sub<&'a RatFunc> for &'a RatFunc {
    type Output = RatFunc;
    fn sub(self, o: &RatFunc) -> RatFunc {
        self + &(-o)
    }
}

impl<'a> Mul<&'a RatFunc> for &'a RatFunc {
    type Output = RatFunc;
    fn mul(self, o: &RatFunc) -> RatFunc {
        if self.is_zero() || o.is_zero() {
            return RatFunc::zero(self.vars());
        }
        let g1 = gcd(&self.num, &o.den);
        let g2 = gcd(&o.num, &self.den);
        let n1 = self.num.exact_div(&g1).expect("gcd divides");
        let d2 = o.den.exact_div(&g1).expect("gcd divides");
        let n2 = o.num.exact_div(&g2).expect("gcd divides");
        let d1 = self.den.exact_div(&g2).expect("gcd divides");
        RatFunc::normalize(&n1 * &n2, &d1 * &d2)
    }
}

impl Neg for &RatFunc {
    type Output = RatFunc;
    fn neg(self) -> RatFunc {
        RatFunc { num: -&self.num, den: self.den.clone() }
    }
}

impl From<Poly> for RatFunc {
    fn from(p: Poly) -> Self {
        RatFunc::from_poly(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::parse_poly;

    fn rf(n: &str, d: &str) -> RatFunc {
        let v = VarSet::heisenberg(1);
        RatFunc::new(parse_poly(n, &v).unwrap(), parse_poly(d, &v).unwrap()).unwrap()
    }

    #[test]
    fn reduces_to_lowest_terms() {
        assert_eq!(rf("z1*zb1", "z1"), rf("zb1", "1"));
        assert_eq!(rf("2*z1^2 - 2", "4*z1 + 4"), rf("z1 - 1", "2"));
    }

    #[test]
    fn zero_denominator_rejected() {
        let v = VarSet::heisenberg(1);
        assert_eq!(RatFunc::new(Poly::one(&v), Poly::zero(&v)), Err(ScalarError::DivisionByZero));
        assert!(RatFunc::zero(&v).inv().is_err());
    }

    #[test]
    fn field_operations() {
        let a = rf("z1 + t", "zb1 - 1");
        let b = rf("t", "zb1^2 - 1");
        let s = &a + &b;
        assert_eq!(&s - &b, a);
        assert_eq!(&(&a * &b).checked_div(&b).unwrap(), &a);
        assert_eq!(&a * &a.inv().unwrap(), RatFunc::one(a.vars()));
    }

    #[test]
    fn quotient_rule() {
        let a = rf("z1^2", "zb1 + z1");
        let d = a.derivative(0);
        assert_eq!(d, rf("z1^2 + 2*z1*zb1", "(zb1 + z1)^2"));
    }
}
