use std::fmt;
use std::ops::{Add, Sub};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::scalars::{fmt_rational, parse_rational, Rational};

use super::HeisenbergError;

/// Levi-form signature `h = diag(eps)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature(Vec<i8>);

impl Signature {
    pub fn new(eps: Vec<i8>) -> Result<Self, HeisenbergError> {
        if eps.is_empty() {
            return Err(HeisenbergError::BadSignature("dimension must be at least 1".into()));
        }
        if eps.iter().any(|&e| e != 1 && e != -1) {
            return Err(HeisenbergError::BadSignature(format!("entries must be +1 or -1, got {eps:?}")));
        }
        Ok(Self(eps))
    }

    /// Positive definite signature in complex dimension `n`.
    pub fn definite(n: usize) -> Self {
        Self(vec![1; n])
    }

    /// Parses `+`/`-` strings such as `"++-"`, or comma lists such as `"1,-1"`.
    pub fn parse(s: &str) -> Result<Self, HeisenbergError> {
        let s = s.trim();
        let eps = if s.contains(',') {
            s.split(',')
                .map(|x| x.trim().parse::<i8>().map_err(|_| HeisenbergError::BadSignature(s.into())))
                .collect::<Result<Vec<_>, _>>()?
        } else {
            s.chars()
                .map(|c| match c {
                    '+' => Ok(1),
                    '-' => Ok(-1),
                    _ => Err(HeisenbergError::BadSignature(s.into())),
                })
                .collect::<Result<Vec<_>, _>>()?
        };
        Self::new(eps)
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn eps(&self, a: usize) -> i64 {
        self.0[a] as i64
    }

    pub fn entries(&self) -> &[i8] {
        &self.0
    }

    /// Number of positive entries.
    pub fn positive(&self) -> usize {
        self.0.iter().filter(|&&e| e > 0).count()
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &e in &self.0 {
            write!(f, "{}", if e > 0 { '+' } else { '-' })?;
        }
        Ok(())
    }
}

/// Density weight `(w, w')` with `w - w'` an integer.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Weight {
    #[serde(with = "rat_str")]
    pub w: Rational,
    #[serde(with = "rat_str")]
    pub wp: Rational,
}

mod rat_str {
    use super::{fmt_rational, parse_rational, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        parse_rational(&String::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

impl Weight {
    pub fn new(w: Rational, wp: Rational) -> Result<Self, HeisenbergError> {
        if !(&w - &wp).is_integer() {
            return Err(HeisenbergError::NonIntegralWeight(fmt_rational(&w), fmt_rational(&wp)));
        }
        Ok(Self { w, wp })
    }

    /// Integer weight; never fails.
    pub fn ints(w: i64, wp: i64) -> Self {
        Self { w: Rational::from_integer(w.into()), wp: Rational::from_integer(wp.into()) }
    }

    pub fn zero() -> Self {
        Self::ints(0, 0)
    }

    pub fn swapped(&self) -> Self {
        Self { w: self.wp.clone(), wp: self.w.clone() }
    }

    /// Shift by integers.
    pub fn shift(&self, dw: i64, dwp: i64) -> Self {
        self + &Self::ints(dw, dwp)
    }

    /// `n + w + w'`.
    pub fn total(&self, n: usize) -> Rational {
        Rational::from_integer((n as i64).into()) + &self.w + &self.wp
    }

    /// `k = n + w + w' + 1` when it is a positive integer.
    pub fn order(&self, n: usize) -> Option<u32> {
        let k = self.total(n) + Rational::one();
        (k.is_integer() && k > Rational::zero()).then(|| k.to_integer().try_into().ok()).flatten()
    }

    /// Whether `w` and `w'` are both non-negative integers.
    pub fn is_forbidden(&self) -> bool {
        let nat = |r: &Rational| r.is_integer() && *r >= Rational::zero();
        nat(&self.w) && nat(&self.wp)
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", fmt_rational(&self.w), fmt_rational(&self.wp))
    }
}

impl<'a> Add<&'a Weight> for &'a Weight {
    type Output = Weight;
    fn add(self, o: &Weight) -> Weight {
        Weight { w: &self.w + &o.w, wp: &self.wp + &o.wp }
    }
}

impl<'a> Sub<&'a Weight> for &'a Weight {
    type Output = Weight;
    fn sub(self, o: &Weight) -> Weight {
        Weight { w: &self.w - &o.w, wp: &self.wp - &o.wp }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::rat;

    #[test]
    fn weight_integrality() {
        assert!(Weight::new(rat(1, 3), rat(1, 3)).is_ok());
        assert!(Weight::new(rat(1, 3), rat(0, 1)).is_err());
    }

    #[test]
    fn order_and_forbidden() {
        assert_eq!(Weight::ints(2, -2).order(1), Some(2));
        assert_eq!(Weight::ints(-3, 0).order(1), None);
        assert!(Weight::ints(0, 2).is_forbidden());
        assert!(!Weight::ints(0, -2).is_forbidden());
    }

    #[test]
    fn signature_parsing() {
        assert_eq!(Signature::parse("+-").unwrap().entries(), &[1, -1]);
        assert_eq!(Signature::parse("1,1").unwrap(), Signature::definite(2));
        assert!(Signature::parse("+x").is_err());
        assert!(Signature::parse("").is_err());
    }
}
