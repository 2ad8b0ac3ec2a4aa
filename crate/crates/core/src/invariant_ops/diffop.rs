//! Linear differential operators with polynomial coefficients in normal order.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::heisenberg::{Coeff, Weight};
use crate::scalars::{parse_poly, ExactScalar, Mono, Poly, Rational, VarSet};

use super::InvariantError;

/// `sum_mu c_mu d^mu`, coefficients to the left of derivatives.
#[derive(Clone, PartialEq)]
pub struct Operator {
    vars: Arc<VarSet>,
    terms: BTreeMap<Mono, Poly>,
}

fn binom(n: u16, k: u16) -> i64 {
    (0..k as i64).fold(1, |acc, i| acc * (n as i64 - i) / (i + 1))
}

/// All `rho <= mu` with the multinomial coefficient `prod C(mu_i, rho_i)`.
fn sub_monos(mu: &Mono, nv: usize) -> Vec<(Mono, i64)> {
    let mut out = vec![(Mono::one(), 1i64)];
    for i in 0..nv {
        if mu.0[i] == 0 {
            continue;
        }
        let mut next = Vec::with_capacity(out.len() * (mu.0[i] as usize + 1));
        for (r, c) in &out {
            for e in 0..=mu.0[i] {
                let mut r2 = *r;
                r2.0[i] = e;
                next.push((r2, c * binom(mu.0[i], e)));
            }
        }
        out = next;
    }
    out
}

fn sub(mu: &Mono, rho: &Mono) -> Mono {
    let mut m = *mu;
    for i in 0..m.0.len() {
        m.0[i] -= rho.0[i];
    }
    m
}

impl Operator {
    pub fn zero(vars: &Arc<VarSet>) -> Self {
        Self { vars: vars.clone(), terms: BTreeMap::new() }
    }

    pub fn identity(vars: &Arc<VarSet>) -> Self {
        Self::multiplication(&Poly::one(vars))
    }

    pub fn multiplication(p: &Poly) -> Self {
        let mut r = Self::zero(p.vars());
        r.add_term(Mono::one(), p);
        r
    }

    /// The coordinate derivative `d/dx_i`.
    pub fn partial(vars: &Arc<VarSet>, i: usize) -> Self {
        let mut r = Self::zero(vars);
        r.add_term(Mono::var(i), &Poly::one(vars));
        r
    }

    pub fn from_terms(vars: &Arc<VarSet>, terms: impl IntoIterator<Item = (Mono, Poly)>) -> Self {
        let mut r = Self::zero(vars);
        for (m, p) in terms {
            r.add_term(m, &p);
        }
        r
    }

    pub fn vars(&self) -> &Arc<VarSet> {
        &self.vars
    }

    pub fn terms(&self) -> &BTreeMap<Mono, Poly> {
        &self.terms
    }

    pub fn coeff(&self, mu: &Mono) -> Poly {
        self.terms.get(mu).cloned().unwrap_or_else(|| Poly::zero(&self.vars))
    }

    pub fn add_term(&mut self, mu: Mono, p: &Poly) {
        if p.is_zero() {
            return;
        }
        let e = self.terms.entry(mu).or_insert_with(|| Poly::zero(&self.vars));
        e.add_assign_ref(p);
        if e.is_zero() {
            self.terms.remove(&mu);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Highest derivative order, each variable counting `weights[i]` (1 if absent).
    pub fn order_weighted(&self, weights: &[u32]) -> Option<u32> {
        self.terms.keys().map(|m| m.weighted_degree(weights)).max()
    }

    pub fn order(&self) -> Option<u32> {
        self.order_weighted(&[])
    }

    /// Terms of exactly the given weighted order.
    pub fn part_of_order(&self, order: u32, weights: &[u32]) -> Self {
        Self::from_terms(&self.vars, self.terms.iter().filter(|(m, _)| m.weighted_degree(weights) == order).map(|(m, p)| (*m, p.clone())))
    }

    pub fn apply(&self, f: &Poly) -> Poly {
        let mut acc = Poly::zero(&self.vars);
        for (mu, c) in &self.terms {
            let g = f.derivative_multi(mu);
            if !g.is_zero() {
                acc.add_assign_ref(&(c * &g));
            }
        }
        acc
    }

    /// `self o other`.
    pub fn compose(&self, other: &Self) -> Self {
        let nv = self.vars.len();
        let mut r = Self::zero(&self.vars);
        for (mu, c) in &self.terms {
            for (rho, b) in sub_monos(mu, nv) {
                let rest = sub(mu, &rho);
                for (nu, d) in &other.terms {
                    let dd = d.derivative_multi(&rho);
                    if dd.is_zero() {
                        continue;
                    }
                    let coef = (c * &dd).scale(&ExactScalar::int(b));
                    r.add_term(rest.mul(nu), &coef);
                }
            }
        }
        r
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::identity(&self.vars), |acc, _| acc.compose(self))
    }

    fn swapped_mono(&self, mu: &Mono) -> Mono {
        let mut m = Mono::one();
        for i in 0..self.vars.len() {
            m.0[self.vars.conj_of(i)] = mu.0[i];
        }
        m
    }

    /// The operator `f -> conj(P conj(f))`.
    pub fn conj(&self) -> Self {
        Self::from_terms(&self.vars, self.terms.iter().map(|(m, p)| (self.swapped_mono(m), p.conj())))
    }

    /// Adjoint for the Hermitian pairing `int u conj(v)` against coordinate measure.
    pub fn adjoint(&self) -> Self {
        let mut r = Self::zero(&self.vars);
        for (mu, c) in &self.terms {
            let sign = if mu.degree() % 2 == 0 { 1 } else { -1 };
            let d = Self::from_terms(&self.vars, [(self.swapped_mono(mu), Poly::one(&self.vars).scale(&ExactScalar::int(sign)))]);
            r = r.add(&d.compose(&Self::multiplication(&c.conj())));
        }
        r
    }

    /// Transpose for the bilinear pairing `int u v` against coordinate measure.
    pub fn transpose(&self) -> Self {
        let mut r = Self::zero(&self.vars);
        for (mu, c) in &self.terms {
            let sign = if mu.degree() % 2 == 0 { 1 } else { -1 };
            let d = Self::from_terms(&self.vars, [(*mu, Poly::one(&self.vars).scale(&ExactScalar::int(sign)))]);
            r = r.add(&d.compose(&Self::multiplication(c)));
        }
        r
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = self.clone();
        for (m, p) in &o.terms {
            r.add_term(*m, p);
        }
        r
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&ExactScalar::int(-1)))
    }

    pub fn scale(&self, c: &ExactScalar) -> Self {
        Self::from_terms(&self.vars, self.terms.iter().map(|(m, p)| (*m, p.scale(c))))
    }

    /// Records `{multi_index, coeff}` in canonical multi-index order.
    pub fn to_records(&self) -> Vec<OpRecord> {
        self.terms.iter().map(|(m, p)| OpRecord { multi_index: m.0[..self.vars.len()].to_vec(), coeff: p.to_string() }).collect()
    }

    pub fn from_records(vars: &Arc<VarSet>, recs: &[OpRecord]) -> Result<Self, InvariantError> {
        let mut r = Self::zero(vars);
        for rec in recs {
            if rec.multi_index.len() != vars.len() {
                return Err(InvariantError::Format(format!("multi-index of length {}", rec.multi_index.len())));
            }
            let p = parse_poly(&rec.coeff, vars).map_err(|e| InvariantError::Format(e.to_string()))?;
            r.add_term(Mono::from_slice(&rec.multi_index), &p);
        }
        Ok(r)
    }
}

impl Coeff for Operator {
    fn zero(vars: &Arc<VarSet>) -> Self {
        Operator::zero(vars)
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn add_scaled(&mut self, c: &ExactScalar, o: &Self) {
        for (m, p) in &o.terms {
            self.add_term(*m, &p.scale(c));
        }
    }
    fn add_mul(&mut self, p: &Poly, o: &Self) {
        if p.is_zero() {
            return;
        }
        for (m, q) in &o.terms {
            self.add_term(*m, &(p * q));
        }
    }
    fn scale(&self, c: &ExactScalar) -> Self {
        Operator::scale(self, c)
    }
    fn mul_poly(&self, p: &Poly) -> Self {
        Self::from_terms(&self.vars, self.terms.iter().map(|(m, q)| (*m, p * q)))
    }
    fn d(&self, i: usize) -> Self {
        let mut r = Self::zero(&self.vars);
        for (m, p) in &self.terms {
            r.add_term(*m, &p.derivative(i));
            r.add_term(m.mul(&Mono::var(i)), p);
        }
        r
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (m, p)) in self.terms.iter().rev().enumerate() {
            if idx > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({p})")?;
            for i in 0..self.vars.len() {
                match m.0[i] {
                    0 => {}
                    1 => write!(f, "*d_{}", self.vars.name(i))?,
                    e => write!(f, "*d_{}^{e}", self.vars.name(i))?,
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Operator({self})")
    }
}

/// Serialized operator term.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpRecord {
    pub multi_index: Vec<u16>,
    pub coeff: String,
}

/// An operator between density bundles `E(domain) -> E(codomain)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffOp {
    pub op: Operator,
    pub domain: Weight,
    pub codomain: Weight,
}

/// Serialized [`DiffOp`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffOpRecord {
    pub domain: Weight,
    pub codomain: Weight,
    pub terms: Vec<OpRecord>,
}

impl DiffOp {
    pub fn new(op: Operator, domain: Weight, codomain: Weight) -> Self {
        Self { op, domain, codomain }
    }

    pub fn identity(vars: &Arc<VarSet>, w: Weight) -> Self {
        Self::new(Operator::identity(vars), w.clone(), w)
    }

    /// `self o other`; requires `other` to land in the domain of `self`.
    pub fn compose(&self, other: &Self) -> Result<Self, InvariantError> {
        if self.domain != other.codomain {
            return Err(InvariantError::WeightMismatch(other.codomain.to_string(), self.domain.to_string()));
        }
        Ok(Self::new(self.op.compose(&other.op), other.domain.clone(), self.codomain.clone()))
    }

    pub fn is_zero(&self) -> bool {
        self.op.is_zero()
    }

    pub fn scale(&self, c: &ExactScalar) -> Self {
        Self::new(self.op.scale(c), self.domain.clone(), self.codomain.clone())
    }

    pub fn add(&self, o: &Self) -> Result<Self, InvariantError> {
        if self.domain != o.domain || self.codomain != o.codomain {
            return Err(InvariantError::WeightMismatch(o.domain.to_string(), self.domain.to_string()));
        }
        Ok(Self::new(self.op.add(&o.op), self.domain.clone(), self.codomain.clone()))
    }

    /// Formal adjoint for the Hermitian pairing into volume densities of weight
    /// `(-n-1, -n-1)`.
    pub fn adjoint(&self, n: usize) -> Self {
        Self::new(self.op.adjoint(), hermitian_dual(&self.codomain, n), hermitian_dual(&self.domain, n))
    }

    pub fn to_record(&self) -> DiffOpRecord {
        DiffOpRecord { domain: self.domain.clone(), codomain: self.codomain.clone(), terms: self.op.to_records() }
    }

    pub fn from_record(vars: &Arc<VarSet>, r: &DiffOpRecord) -> Result<Self, InvariantError> {
        Ok(Self::new(Operator::from_records(vars, &r.terms)?, r.domain.clone(), r.codomain.clone()))
    }
}

/// `E(w, w')^* = E(-n-1-w', -n-1-w)` under the Hermitian pairing.
pub fn hermitian_dual(w: &Weight, n: usize) -> Weight {
    let m = Rational::from_integer((-(n as i64) - 1).into());
    Weight::new(&m - &w.wp, &m - &w.w).expect("integral difference preserved")
}

impl fmt::Display for DiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "E{} -> E{}: {}", self.domain, self.codomain, self.op)
    }
}
