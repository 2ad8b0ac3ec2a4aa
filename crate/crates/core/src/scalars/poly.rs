//! Sparse multivariate polynomials over `Q(i)`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_traits::{One, Zero};

use super::exact::ExactScalar;
use super::ScalarError;

/// Maximum number of variables a [`Poly`] may carry.
pub const MAX_VARS: usize = 12;

/// Exponent vector. Unused trailing slots stay zero.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Mono(pub [u16; MAX_VARS]);

impl Mono {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn var(i: usize) -> Self {
        let mut m = Self::default();
        m.0[i] = 1;
        m
    }

    pub fn from_slice(e: &[u16]) -> Self {
        let mut m = Self::default();
        m.0[..e.len()].copy_from_slice(e);
        m
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    /// Degree with variable `i` counting `weights[i]` (1 when absent).
    pub fn weighted_degree(&self, weights: &[u32]) -> u32 {
        self.0.iter().enumerate().map(|(i, &e)| e as u32 * weights.get(i).copied().unwrap_or(1)).sum()
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut m = *self;
        for (a, b) in m.0.iter_mut().zip(o.0.iter()) {
            *a += *b;
        }
        m
    }

    pub fn divides(&self, o: &Self) -> bool {
        self.0.iter().zip(o.0.iter()).all(|(a, b)| a <= b)
    }

    /// `o / self`, assuming `self.divides(o)`.
    pub fn quotient_of(&self, o: &Self) -> Self {
        let mut m = *o;
        for (a, b) in m.0.iter_mut().zip(self.0.iter()) {
            *a -= *b;
        }
        m
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }
}

impl fmt::Debug for Mono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let last = self.0.iter().rposition(|&e| e != 0).map_or(0, |p| p + 1);
        write!(f, "{:?}", &self.0[..last])
    }
}

/// Ordered variable names plus the involution used by complex conjugation.
#[derive(Debug, PartialEq, Eq, Hash)]
pub struct VarSet {
    names: Vec<String>,
    conj: Vec<usize>,
}

impl VarSet {
    pub fn new(names: Vec<String>, conj: Vec<usize>) -> Arc<Self> {
        assert!(names.len() <= MAX_VARS, "too many variables");
        assert_eq!(names.len(), conj.len());
        assert!(conj.iter().enumerate().all(|(i, &j)| conj[j] == i), "conj must be an involution");
        Arc::new(Self { names, conj })
    }

    /// Variables `z1..zn, zb1..zbn, t` of the Heisenberg group.
    pub fn heisenberg(n: usize) -> Arc<Self> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<VarSet>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        cache
            .lock()
            .unwrap()
            .entry(n)
            .or_insert_with(|| {
                let names = (1..=n)
                    .map(|a| format!("z{a}"))
                    .chain((1..=n).map(|a| format!("zb{a}")))
                    .chain(std::iter::once("t".to_string()))
                    .collect();
                Self::new(names, Self::paired_conj(n, 1))
            })
            .clone()
    }

    /// `m` holomorphic variables named `holo`, their conjugates named `anti`,
    /// then `extra` real variables.
    pub fn complex(holo: &[&str], anti: &[&str], extra: &[&str]) -> Arc<Self> {
        assert_eq!(holo.len(), anti.len());
        let names = holo.iter().chain(anti).chain(extra).map(|s| s.to_string()).collect();
        Self::new(names, Self::paired_conj(holo.len(), extra.len()))
    }

    fn paired_conj(m: usize, extra: usize) -> Vec<usize> {
        (0..m).map(|a| a + m).chain(0..m).chain(2 * m..2 * m + extra).collect()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|s| s == name)
    }

    pub fn conj_of(&self, i: usize) -> usize {
        self.conj[i]
    }
}

/// A polynomial in the variables of a [`VarSet`].
#[derive(Clone)]
pub struct Poly {
    vars: Arc<VarSet>,
    terms: BTreeMap<Mono, ExactScalar>,
}

impl PartialEq for Poly {
    fn eq(&self, o: &Self) -> bool {
        (Arc::ptr_eq(&self.vars, &o.vars) || self.vars == o.vars) && self.terms == o.terms
    }
}

impl Eq for Poly {}

impl Poly {
    pub fn zero(vars: &Arc<VarSet>) -> Self {
        Self { vars: vars.clone(), terms: BTreeMap::new() }
    }

    pub fn constant(vars: &Arc<VarSet>, c: ExactScalar) -> Self {
        let mut p = Self::zero(vars);
        if !c.is_zero() {
            p.terms.insert(Mono::one(), c);
        }
        p
    }

    pub fn one(vars: &Arc<VarSet>) -> Self {
        Self::constant(vars, ExactScalar::one())
    }

    pub fn var(vars: &Arc<VarSet>, i: usize) -> Self {
        assert!(i < vars.len());
        Self::monomial(vars, Mono::var(i), ExactScalar::one())
    }

    pub fn monomial(vars: &Arc<VarSet>, m: Mono, c: ExactScalar) -> Self {
        let mut p = Self::zero(vars);
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs, merging repeats.
    pub fn from_terms(vars: &Arc<VarSet>, it: impl IntoIterator<Item = (Mono, ExactScalar)>) -> Self {
        let mut p = Self::zero(vars);
        for (m, c) in it {
            p.add_term(m, &c);
        }
        p
    }

    pub fn vars(&self) -> &Arc<VarSet> {
        &self.vars
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Mono, &ExactScalar)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, m: &Mono) -> ExactScalar {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(Mono::is_one)
    }

    /// The constant coefficient, if the polynomial is constant.
    pub fn as_constant(&self) -> Option<ExactScalar> {
        self.is_constant().then(|| self.coeff(&Mono::one()))
    }

    pub fn add_term(&mut self, m: Mono, c: &ExactScalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c.clone());
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn check_vars(&self, o: &Self) {
        assert!(Arc::ptr_eq(&self.vars, &o.vars) || self.vars == o.vars, "polynomials over different variable sets");
    }

    pub fn add_assign_ref(&mut self, o: &Self) {
        self.check_vars(o);
        for (m, c) in &o.terms {
            self.add_term(*m, c);
        }
    }

    pub fn sub_assign_ref(&mut self, o: &Self) {
        self.check_vars(o);
        for (m, c) in &o.terms {
            self.add_term(*m, &-c);
        }
    }

    /// `self += c * o`.
    pub fn add_scaled(&mut self, c: &ExactScalar, o: &Self) {
        self.check_vars(o);
        if c.is_zero() {
            return;
        }
        for (m, d) in &o.terms {
            self.add_term(*m, &(c * d));
        }
    }

    pub fn scale(&self, c: &ExactScalar) -> Self {
        if c.is_zero() {
            return Self::zero(&self.vars);
        }
        Self { vars: self.vars.clone(), terms: self.terms.iter().map(|(m, d)| (*m, c * d)).collect() }
    }

    pub fn mul_mono(&self, m: &Mono, c: &ExactScalar) -> Self {
        if c.is_zero() {
            return Self::zero(&self.vars);
        }
        Self { vars: self.vars.clone(), terms: self.terms.iter().map(|(k, d)| (k.mul(m), c * d)).collect() }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one(&self.vars);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Partial derivative in variable `i`.
    pub fn derivative(&self, i: usize) -> Self {
        let mut p = Self::zero(&self.vars);
        for (m, c) in &self.terms {
            let e = m.0[i];
            if e > 0 {
                let mut k = *m;
                k.0[i] -= 1;
                p.terms.insert(k, c * &ExactScalar::int(e as i64));
            }
        }
        p
    }

    /// Iterated derivative `d^mu`.
    pub fn derivative_multi(&self, mu: &Mono) -> Self {
        let mut p = Self::zero(&self.vars);
        'terms: for (m, c) in &self.terms {
            let mut k = *m;
            let mut f = num_bigint::BigInt::one();
            for i in 0..MAX_VARS {
                let (e, d) = (m.0[i], mu.0[i]);
                if d > e {
                    continue 'terms;
                }
                for j in 0..d {
                    f *= (e - j) as i64;
                }
                k.0[i] = e - d;
            }
            p.terms.insert(k, c * &ExactScalar::real(f.into()));
        }
        p
    }

    /// Complex conjugation: conjugates coefficients and applies the variable involution.
    pub fn conj(&self) -> Self {
        let n = self.nvars();
        let terms = self
            .terms
            .iter()
            .map(|(m, c)| {
                let mut k = Mono::default();
                for i in 0..n {
                    k.0[self.vars.conj_of(i)] = m.0[i];
                }
                (k, c.conj())
            })
            .collect();
        Self { vars: self.vars.clone(), terms }
    }

    pub fn is_real(&self) -> bool {
        *self == self.conj()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Mono::degree).max().unwrap_or(0)
    }

    /// Maximal weighted degree, variable `i` counting `weights[i]`.
    pub fn weighted_degree(&self, weights: &[u32]) -> u32 {
        self.terms.keys().map(|m| m.weighted_degree(weights)).max().unwrap_or(0)
    }

    pub fn degree_in(&self, i: usize) -> u16 {
        self.terms.keys().map(|m| m.0[i]).max().unwrap_or(0)
    }

    /// Leading term in lexicographic order.
    pub fn leading(&self) -> Option<(&Mono, &ExactScalar)> {
        self.terms.iter().next_back()
    }

    /// Substitutes `images[i]` for variable `i`; the result lives over the images' variables.
    pub fn compose(&self, images: &[Poly]) -> Poly {
        assert_eq!(images.len(), self.nvars());
        let target = images.first().map_or_else(|| self.vars.clone(), |p| p.vars.clone());
        let mut cache: Vec<Vec<Poly>> = images.iter().map(|p| vec![Poly::one(&target), p.clone()]).collect();
        let mut out = Poly::zero(&target);
        for (m, c) in &self.terms {
            let mut t = Poly::constant(&target, c.clone());
            for (i, &e) in m.0[..self.nvars()].iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while cache[i].len() <= e as usize {
                    let next = &cache[i][cache[i].len() - 1] * &images[i];
                    cache[i].push(next);
                }
                t = &t * &cache[i][e as usize];
            }
            out.add_assign_ref(&t);
        }
        out
    }

    /// Re-expresses the polynomial over `target`, mapping variables by name.
    pub fn embed(&self, target: &Arc<VarSet>) -> Result<Poly, ScalarError> {
        let images = self
            .vars
            .names()
            .iter()
            .map(|nm| target.index_of(nm).map(|j| Poly::var(target, j)).ok_or_else(|| ScalarError::IncompatibleVars(nm.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        if images.is_empty() {
            return Ok(Poly::constant(target, self.coeff(&Mono::one())));
        }
        Ok(self.compose(&images))
    }

    /// Evaluates at a point.
    pub fn eval(&self, point: &[ExactScalar]) -> ExactScalar {
        let mut acc = ExactScalar::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, x) in point.iter().enumerate() {
                t = &t * &x.pow(m.0[i] as u32);
            }
            acc += &t;
        }
        acc
    }

    /// Splits by the power of variable `i`: `self = sum_k x_i^k * out[k]`.
    pub fn split_var(&self, i: usize) -> BTreeMap<u16, Poly> {
        let mut out: BTreeMap<u16, Poly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut k = *m;
            let e = k.0[i];
            k.0[i] = 0;
            out.entry(e).or_insert_with(|| Poly::zero(&self.vars)).terms.insert(k, c.clone());
        }
        out
    }

    /// Exact division. Fails unless `d` divides `self`.
    pub fn exact_div(&self, d: &Poly) -> Result<Poly, ScalarError> {
        self.check_vars(d);
        let (lm, lc) = match d.leading() {
            Some((m, c)) => (*m, c.clone()),
            None => return Err(ScalarError::DivisionByZero),
        };
        let lc_inv = lc.inv()?;
        let mut rem = self.clone();
        let mut q = Poly::zero(&self.vars);
        while let Some((m, c)) = rem.leading().map(|(m, c)| (*m, c.clone())) {
            if !lm.divides(&m) {
                return Err(ScalarError::NotDivisible);
            }
            let qm = lm.quotient_of(&m);
            let qc = &c * &lc_inv;
            rem.sub_assign_ref(&d.mul_mono(&qm, &qc));
            q.terms.insert(qm, qc);
        }
        Ok(q)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            let mono = self.fmt_mono(m);
            let (neg, mag) = if c.is_real() {
                (c.re < num_rational::BigRational::zero(), ExactScalar::real(num_traits::Signed::abs(&c.re)))
            } else if c.re.is_zero() {
                (c.im < num_rational::BigRational::zero(), ExactScalar::imag(1, 1).scale(&num_traits::Signed::abs(&c.im)))
            } else {
                (false, c.clone())
            };
            match (k, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let coeff = mag.to_string();
            match (mag.is_one(), mono.is_empty()) {
                (true, true) => write!(f, "1")?,
                (true, false) => write!(f, "{mono}")?,
                (false, true) => write!(f, "{coeff}")?,
                (false, false) => write!(f, "{coeff}*{mono}")?,
            }
        }
        Ok(())
    }
}

impl Poly {
    fn fmt_mono(&self, m: &Mono) -> String {
        let mut parts = Vec::new();
        for i in 0..self.nvars() {
            match m.0[i] {
                0 => {}
                1 => parts.push(self.vars.name(i).to_string()),
                e => parts.push(format!("{}^{e}", self.vars.name(i))),
            }
        }
        parts.join("*")
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl<'a> Add<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn add(self, o: &Poly) -> Poly {
        let mut p = self.clone();
        p.add_assign_ref(o);
        p
    }
}

impl<'a> Sub<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn sub(self, o: &Poly) -> Poly {
        let mut p = self.clone();
        p.sub_assign_ref(o);
        p
    }
}

impl<'a> Mul<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn mul(self, o: &Poly) -> Poly {
        self.check_vars(o);
        let mut acc: HashMap<Mono, ExactScalar> = HashMap::new();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                let e = acc.entry(m1.mul(m2)).or_default();
                *e += &(c1 * c2);
            }
        }
        Poly { vars: self.vars.clone(), terms: acc.into_iter().filter(|(_, c)| !c.is_zero()).collect() }
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(&ExactScalar::int(-1))
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Poly> for Poly {
            type Output = Poly;
            fn $m(self, rhs: Poly) -> Poly {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h1() -> Arc<VarSet> {
        VarSet::heisenberg(1)
    }

    #[test]
    fn conjugation_swaps_z_and_zbar_and_fixes_t() {
        let v = h1();
        let z = Poly::var(&v, 0);
        let t = Poly::var(&v, 2);
        let p = &(&z * &t).scale(&ExactScalar::i()) + &z;
        let q = p.conj();
        let zb = Poly::var(&v, 1);
        let expect = &(&zb * &t).scale(&ExactScalar::imag(-1, 1)) + &zb;
        assert_eq!(q, expect);
        assert_eq!(q.conj(), p);
    }

    #[test]
    fn derivative_and_product_rule() {
        let v = h1();
        let z = Poly::var(&v, 0);
        let zb = Poly::var(&v, 1);
        let a = &z.pow(3) + &zb;
        let b = &(&z * &zb) + &Poly::var(&v, 2);
        let lhs = (&a * &b).derivative(0);
        let rhs = &(&a.derivative(0) * &b) + &(&a * &b.derivative(0));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn exact_division() {
        let v = h1();
        let z = Poly::var(&v, 0);
        let zb = Poly::var(&v, 1);
        let a = &z + &zb;
        let b = &z - &Poly::var(&v, 2);
        let prod = &a * &b;
        assert_eq!(prod.exact_div(&b).unwrap(), a);
        assert_eq!((&prod + &Poly::one(&v)).exact_div(&b), Err(ScalarError::NotDivisible));
    }

    #[test]
    fn compose_substitutes() {
        let v = h1();
        let t = Poly::var(&v, 2);
        let half_t = t.scale(&ExactScalar::frac(1, 2));
        let images = [Poly::var(&v, 0), Poly::var(&v, 1), half_t.clone()];
        assert_eq!(t.pow(2).compose(&images), half_t.pow(2));
    }

    #[test]
    fn display_round_trips_through_parser() {
        let v = VarSet::heisenberg(2);
        let p = crate::scalars::parse_poly("3/2*z1^2*zb2 - i*t + (1-2*i)*z2 - 7", &v).unwrap();
        let q = crate::scalars::parse_poly(&p.to_string(), &v).unwrap();
        assert_eq!(p, q);
    }
}
