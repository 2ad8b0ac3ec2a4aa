//! Folland-Stein factorization and matrix representation of flat operators.

use std::collections::BTreeMap;

use serde::Serialize;

use num_traits::{Signed, ToPrimitive, Zero};

use crate::heisenberg::Frame;
use crate::scalars::{ExactScalar, Mono, Poly, Rational};

use super::Operator;

/// `Delta_b = -sum_a eps_a (Zbar_a Z_a + Z_a Zbar_a)` on the flat model.
pub fn delta_b(frame: &Frame) -> Operator {
    let id = Operator::identity(frame.vars());
    let mut r = Operator::zero(frame.vars());
    for a in 0..frame.n() {
        let e = ExactScalar::int(-frame.sig().eps(a));
        let x = frame.zb(a, &frame.z(a, &id)).add(&frame.z(a, &frame.zb(a, &id)));
        r = r.add(&x.scale(&e));
    }
    r
}

/// `T = d/dt`.
pub fn t_op(frame: &Frame) -> Operator {
    Operator::partial(frame.vars(), frame.t_var())
}

type Coord = (Mono, Mono);

fn coords(op: &Operator) -> BTreeMap<Coord, ExactScalar> {
    let mut out = BTreeMap::new();
    for (mu, p) in op.terms() {
        for (m, c) in p.terms() {
            out.insert((*mu, *m), c.clone());
        }
    }
    out
}

/// Solves `sum_j x_j cols[j] = rhs` exactly; `None` when inconsistent.
fn solve(cols: &[BTreeMap<Coord, ExactScalar>], rhs: &BTreeMap<Coord, ExactScalar>) -> Option<Vec<ExactScalar>> {
    let mut keys: Vec<&Coord> = cols.iter().flat_map(|c| c.keys()).chain(rhs.keys()).collect();
    keys.sort();
    keys.dedup();
    let m = cols.len();
    let mut rows: Vec<Vec<ExactScalar>> = keys
        .iter()
        .map(|k| {
            let mut r: Vec<ExactScalar> = cols.iter().map(|c| c.get(*k).cloned().unwrap_or_else(ExactScalar::zero)).collect();
            r.push(rhs.get(*k).cloned().unwrap_or_else(ExactScalar::zero));
            r
        })
        .collect();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..m {
        let Some(p) = (row..rows.len()).find(|&i| !rows[i][col].is_zero()) else { continue };
        rows.swap(row, p);
        let inv = rows[row][col].inv().ok()?;
        rows[row] = rows[row].iter().map(|x| x * &inv).collect();
        for i in 0..rows.len() {
            if i != row && !rows[i][col].is_zero() {
                let f = rows[i][col].clone();
                let pr = rows[row].clone();
                for (x, y) in rows[i].iter_mut().zip(&pr) {
                    *x -= &(&f * y);
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    if rows[row..].iter().any(|r| !r[m].is_zero()) {
        return None;
    }
    let mut x = vec![ExactScalar::zero(); m];
    for (i, &c) in pivots.iter().enumerate() {
        x[c] = rows[i][m].clone();
    }
    Some(x)
}

fn divisors(v: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 1;
    while d * d <= v {
        if v.is_multiple_of(d) {
            out.push(d);
            if d * d != v {
                out.push(v / d);
            }
        }
        d += 1;
    }
    out
}

/// Rational roots (with multiplicity) of a monic real polynomial, highest degree first.
fn rational_roots(coeffs: &[Rational]) -> Option<Vec<Rational>> {
    let mut c = coeffs.to_vec();
    let mut roots = Vec::new();
    while c.len() > 1 {
        if c.last().is_some_and(|x| x.is_zero()) {
            roots.push(Rational::zero());
            c.pop();
            continue;
        }
        let lcm = c.iter().fold(num_bigint::BigInt::from(1), |a, x| num_integer::Integer::lcm(&a, x.denom()));
        let ints: Vec<num_bigint::BigInt> = c.iter().map(|x| (x * Rational::from_integer(lcm.clone())).to_integer()).collect();
        let a0 = ints.last()?.abs().to_u64()?;
        let an = ints[0].abs().to_u64()?;
        let eval = |r: &Rational| c.iter().fold(Rational::zero(), |acc, x| acc * r + x);
        let mut found = None;
        'search: for p in divisors(a0) {
            for q in divisors(an) {
                for s in [1i64, -1] {
                    let r = Rational::new((s * p as i64).into(), (q as i64).into());
                    if eval(&r).is_zero() {
                        found = Some(r);
                        break 'search;
                    }
                }
            }
        }
        let r = found?;
        let mut q = Vec::with_capacity(c.len() - 1);
        let mut acc = Rational::zero();
        for x in &c[..c.len() - 1] {
            acc = acc * &r + x;
            q.push(acc.clone());
        }
        c = q;
        roots.push(r);
    }
    Some(roots)
}

/// Finds `alpha_1..alpha_k` with `op = prod_j (Delta_b + i alpha_j T)` on the flat model,
/// listed in decreasing order (the leftmost factor acts last). `None` if no exact
/// factorization exists.
pub fn folland_stein_factorize(op: &Operator, frame: &Frame, k: u32) -> Option<Vec<Rational>> {
    let lap = delta_b(frame);
    let t = t_op(frame);
    let basis: Vec<_> = (0..=k).map(|j| coords(&lap.pow(k - j).compose(&t.pow(j)))).collect();
    let c = solve(&basis, &coords(op))?;
    if c[0] != ExactScalar::int(1) {
        return None;
    }
    // prod (y + i a_j) = sum_j c_j y^(k-j); with y = -i s this is (-i)^k prod (s - a_j),
    // whose coefficients are i^j c_j.
    let mut real = Vec::with_capacity(c.len());
    let mut ipow = ExactScalar::int(1);
    for cj in &c {
        let x = &ipow * cj;
        if !x.im.is_zero() {
            return None;
        }
        real.push(x.re);
        ipow = ipow.mul_i();
    }
    let mut roots = rational_roots(&real)?;
    roots.sort_by(|a, b| b.cmp(a));
    Some(roots)
}

/// `prod_j (Delta_b + i alpha_j T)`.
pub fn folland_stein_product(alpha: &[Rational], frame: &Frame) -> Operator {
    let lap = delta_b(frame);
    let t = t_op(frame);
    alpha
        .iter()
        .fold(Operator::identity(frame.vars()), |acc, a| acc.compose(&lap.add(&t.scale(&ExactScalar::new(Rational::zero(), a.clone())))))
}

/// Matrix of an operator on monomials of nonisotropic degree at most `bound`
/// (`t` counting 2). Images are projected onto the same basis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OperatorMatrix {
    pub basis: Vec<String>,
    pub entries: Vec<Vec<ExactScalar>>,
}

impl OperatorMatrix {
    /// Matrix product `self * other`.
    pub fn compose(&self, other: &Self) -> Self {
        let dim = self.basis.len();
        let mut entries = vec![vec![ExactScalar::zero(); dim]; dim];
        for (row, out) in self.entries.iter().zip(entries.iter_mut()) {
            for (a, orow) in row.iter().zip(&other.entries).filter(|(a, _)| !a.is_zero()) {
                for (o, b) in out.iter_mut().zip(orow).filter(|(_, b)| !b.is_zero()) {
                    *o += &(a * b);
                }
            }
        }
        Self { basis: self.basis.clone(), entries }
    }
}

/// Monomials of nonisotropic degree at most `bound`.
pub fn graded_basis(frame: &Frame, bound: u32) -> Vec<Mono> {
    let nv = frame.vars().len();
    let weights = nonisotropic_weights(frame);
    let mut out = vec![Mono::one()];
    for i in 0..nv {
        let mut next = Vec::new();
        for m in &out {
            let mut m2 = *m;
            while m2.weighted_degree(&weights) <= bound {
                next.push(m2);
                m2.0[i] += 1;
            }
        }
        out = next;
    }
    out.sort_by_key(|m| (m.weighted_degree(&weights), std::cmp::Reverse(*m)));
    out
}

/// Variable weights with `t` counting 2.
pub fn nonisotropic_weights(frame: &Frame) -> Vec<u32> {
    let mut w = vec![1; frame.vars().len()];
    w[frame.t_var()] = 2;
    w
}

pub fn operator_matrix(op: &Operator, frame: &Frame, bound: u32) -> OperatorMatrix {
    let basis = graded_basis(frame, bound);
    let index: BTreeMap<Mono, usize> = basis.iter().enumerate().map(|(i, m)| (*m, i)).collect();
    let mut entries = vec![vec![ExactScalar::zero(); basis.len()]; basis.len()];
    for (j, m) in basis.iter().enumerate() {
        let img = op.apply(&Poly::monomial(frame.vars(), *m, ExactScalar::int(1)));
        for (mm, c) in img.terms() {
            if let Some(&i) = index.get(mm) {
                entries[i][j] = c.clone();
            }
        }
    }
    let names = basis.iter().map(|m| Poly::monomial(frame.vars(), *m, ExactScalar::int(1)).to_string()).collect();
    OperatorMatrix { basis: names, entries }
}
