//! Multivariate gcd over `Q(i)` by recursive primitive pseudo-remainder sequences.

use num_traits::One;

use super::exact::ExactScalar;
use super::poly::{Mono, Poly};

/// Scales `p` so its lexicographically leading coefficient is 1.
pub fn monic(p: &Poly) -> Poly {
    match p.leading() {
        Some((_, c)) => p.scale(&c.inv().expect("nonzero leading coefficient")),
        None => p.clone(),
    }
}

fn occurring_vars(p: &Poly) -> Vec<bool> {
    let mut occ = vec![false; p.nvars()];
    for (m, _) in p.terms() {
        for (i, o) in occ.iter_mut().enumerate() {
            *o |= m.0[i] > 0;
        }
    }
    occ
}

fn xpow(x: usize, e: u16) -> Mono {
    let mut m = Mono::default();
    m.0[x] = e;
    m
}

/// Content of `p` viewed as a polynomial in `x`, made monic.
fn content_in(p: &Poly, x: usize) -> Poly {
    let mut g = Poly::zero(p.vars());
    for c in p.split_var(x).values() {
        g = gcd(&g, c);
        if g.is_constant() {
            return Poly::one(p.vars());
        }
    }
    g
}

/// Pseudo-remainder of `a` by `b` as polynomials in `x`.
fn prem(a: &Poly, b: &Poly, x: usize) -> Poly {
    let db = b.degree_in(x);
    let bs = b.split_var(x);
    let lcb = bs[&db].clone();
    let mut r = a.clone();
    while !r.is_zero() && r.degree_in(x) >= db {
        let dr = r.degree_in(x);
        let lcr = r.split_var(x).remove(&dr).unwrap();
        let shift = xpow(x, dr - db);
        r = &(&r * &lcb) - &(&b.mul_mono(&shift, &ExactScalar::one()) * &lcr);
    }
    r
}

/// Greatest common divisor, normalized monic (zero only if both inputs are zero).
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return monic(b);
    }
    if b.is_zero() {
        return monic(a);
    }
    if a.is_constant() || b.is_constant() {
        return Poly::one(a.vars());
    }
    let (oa, ob) = (occurring_vars(a), occurring_vars(b));
    let x = (0..a.nvars()).find(|&i| oa[i] || ob[i]).expect("non-constant");
    if !oa[x] {
        return gcd(a, &content_in(b, x));
    }
    if !ob[x] {
        return gcd(&content_in(a, x), b);
    }
    let (ca, cb) = (content_in(a, x), content_in(b, x));
    let gc = gcd(&ca, &cb);
    let mut p = a.exact_div(&ca).expect("content divides");
    let mut q = b.exact_div(&cb).expect("content divides");
    if p.degree_in(x) < q.degree_in(x) {
        std::mem::swap(&mut p, &mut q);
    }
    while !q.is_zero() {
        let r = prem(&p, &q, x);
        p = q;
        q = if r.is_zero() { r } else { primitive_part(&r, x) };
        if !q.is_zero() && q.degree_in(x) == 0 {
            p = Poly::one(a.vars());
            break;
        }
    }
    let pp = if p.degree_in(x) == 0 { Poly::one(a.vars()) } else { primitive_part(&p, x) };
    monic(&(&gc * &pp))
}

fn primitive_part(p: &Poly, x: usize) -> Poly {
    let c = content_in(p, x);
    if c.is_one_poly() {
        monic(p)
    } else {
        monic(&p.exact_div(&c).expect("content divides"))
    }
}

impl Poly {
    fn is_one_poly(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::{parse_poly, VarSet};

    #[test]
    fn gcd_of_products() {
        let v = VarSet::heisenberg(1);
        let p = |s| parse_poly(s, &v).unwrap();
        let g = p("z1*zb1 - t + 2");
        let a = &g * &p("z1 + i*t");
        let b = &g * &p("zb1^2 - 3");
        assert_eq!(gcd(&a, &b), monic(&g));
        assert!(gcd(&p("z1 + 1"), &p("zb1 + 1")).is_constant());
    }

    #[test]
    fn gcd_with_repeated_factors() {
        let v = VarSet::heisenberg(1);
        let p = |s| parse_poly(s, &v).unwrap();
        let f = p("z1 - zb1*t");
        let a = &f.pow(3) * &p("t + 1");
        let b = &f.pow(2) * &p("t - 1");
        assert_eq!(gcd(&a, &b), monic(&f.pow(2)));
    }
}
