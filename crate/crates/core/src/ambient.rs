//! Hypersurface defining functions, the ambient Kähler metric, and formal obstructions.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::Zero;

use crate::heisenberg::{Signature, Weight};
use crate::invariant_ops::Operator;
use crate::scalars::{fmt_rational, gcd, parse_poly, ExactScalar, Poly, RatFunc, Rational, ScalarError, VarSet};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AmbientError {
    #[error("J(phi) is not a nonzero constant: {0}")]
    NonconstantJ(String),
    #[error("defining function must be real and independent of z0")]
    BadDefiningFunction,
    #[error("Levi form is degenerate")]
    Degenerate,
    #[error("expected a polynomial coefficient, got {0}")]
    NotPolynomial(String),
    #[error("adapted coordinates need a Heisenberg-type defining function")]
    NoAdaptedCoordinates,
    #[error("indicial coefficient vanishes at order {0}, before {1}")]
    Indicial(u32, u32),
    #[error("weight {0} does not satisfy n + w + w' + 1 = {1}")]
    WeightMismatch(String, u32),
    #[error("homogeneity {0} is not integral")]
    NonIntegral(String),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

type RatMat = Vec<Vec<RatFunc>>;

fn det(m: &[Vec<Poly>]) -> Poly {
    match m.len() {
        1 => m[0][0].clone(),
        len => {
            let mut acc = Poly::zero(m[0][0].vars());
            for j in 0..len {
                if m[0][j].is_zero() {
                    continue;
                }
                let minor: Vec<Vec<Poly>> =
                    m[1..].iter().map(|row| row.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, p)| p.clone()).collect()).collect();
                let t = &m[0][j] * &det(&minor);
                if j % 2 == 0 {
                    acc.add_assign_ref(&t);
                } else {
                    acc.sub_assign_ref(&t);
                }
            }
            acc
        }
    }
}

/// Gauss-Jordan elimination of `[a | b]`; returns the solved right-hand columns.
fn gauss_jordan(mut a: RatMat, mut b: RatMat) -> Result<RatMat, AmbientError> {
    let size = a.len();
    for col in 0..size {
        let piv = (col..size).find(|&r| !a[r][col].is_zero()).ok_or(AmbientError::Degenerate)?;
        a.swap(col, piv);
        b.swap(col, piv);
        let inv = a[col][col].inv()?;
        a[col] = a[col].iter().map(|x| x * &inv).collect();
        b[col] = b[col].iter().map(|x| x * &inv).collect();
        for r in 0..size {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            let (ar, br): (Vec<_>, Vec<_>) = (
                a[r].iter().zip(&a[col]).map(|(x, y)| x - &(&f * y)).collect(),
                b[r].iter().zip(&b[col]).map(|(x, y)| x - &(&f * y)).collect(),
            );
            a[r] = ar;
            b[r] = br;
        }
    }
    Ok(b)
}

fn invert(m: &RatMat) -> Result<RatMat, AmbientError> {
    let vars = m[0][0].vars().clone();
    let id =
        (0..m.len()).map(|i| (0..m.len()).map(|j| if i == j { RatFunc::one(&vars) } else { RatFunc::zero(&vars) }).collect()).collect();
    gauss_jordan(m.clone(), id)
}

fn transpose<T: Clone>(m: &[Vec<T>]) -> Vec<Vec<T>> {
    (0..m[0].len()).map(|j| m.iter().map(|row| row[j].clone()).collect()).collect()
}

fn rat(r: &Rational) -> ExactScalar {
    ExactScalar::real(r.clone())
}

/// A finite sum `sum_s phi^s R_s`; exponents are kept as produced and folded into
/// `[0, 1)` only when a canonical form is needed.
#[derive(Clone)]
pub struct PhiRat {
    phi: Arc<RatFunc>,
    parts: BTreeMap<Rational, RatFunc>,
}

impl PartialEq for PhiRat {
    fn eq(&self, o: &Self) -> bool {
        self.sub(o).is_zero()
    }
}

impl Eq for PhiRat {}

impl PhiRat {
    pub fn zero(phi: &Arc<RatFunc>) -> Self {
        Self { phi: phi.clone(), parts: BTreeMap::new() }
    }

    pub fn from_rat(phi: &Arc<RatFunc>, r: RatFunc) -> Self {
        Self::phi_pow(phi, &Rational::zero(), r)
    }

    /// `phi^s * r`.
    pub fn phi_pow(phi: &Arc<RatFunc>, s: &Rational, r: RatFunc) -> Self {
        let mut out = Self::zero(phi);
        out.insert(s.clone(), r);
        out
    }

    fn insert(&mut self, s: Rational, r: RatFunc) {
        if r.is_zero() {
            return;
        }
        let next = match self.parts.remove(&s) {
            Some(old) => &old + &r,
            None => r,
        };
        if !next.is_zero() {
            self.parts.insert(s, next);
        }
    }

    /// Canonical parts: one per exponent class, with exponents in `[0, 1)`.
    pub fn parts(&self) -> BTreeMap<Rational, RatFunc> {
        let mut classes: BTreeMap<Rational, Vec<(i32, &RatFunc)>> = BTreeMap::new();
        for (s, r) in &self.parts {
            let fl = s.floor();
            let shift: i32 = fl.to_integer().try_into().expect("small exponent");
            classes.entry(s - fl).or_default().push((shift, r));
        }
        let mut out = BTreeMap::new();
        for (frac, items) in classes {
            let lo = items.iter().map(|(k, _)| *k).min().expect("nonempty");
            let mut num = RatFunc::zero(self.phi.vars());
            for (k, r) in items {
                num = &num + &(r * &self.phi.pow(k - lo).expect("nonnegative power"));
            }
            if !num.is_zero() {
                out.insert(frac, &num * &self.phi.pow(lo).expect("phi is nonzero"));
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.parts().is_empty()
    }

    /// The value as a rational function when only integral exponents occur.
    pub fn as_rat(&self) -> Option<RatFunc> {
        let parts = self.parts();
        match parts.len() {
            0 => Some(RatFunc::zero(self.phi.vars())),
            1 => parts.get(&Rational::zero()).cloned(),
            _ => None,
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (s, r) in &o.parts {
            out.insert(s.clone(), r.clone());
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&ExactScalar::int(-1)))
    }

    pub fn scale(&self, c: &ExactScalar) -> Self {
        let mut out = Self::zero(&self.phi);
        for (s, r) in &self.parts {
            out.insert(s.clone(), r.scale(c));
        }
        out
    }

    pub fn mul_rat(&self, f: &RatFunc) -> Self {
        let mut out = Self::zero(&self.phi);
        for (s, r) in &self.parts {
            out.insert(s.clone(), r * f);
        }
        out
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Self::zero(&self.phi);
        for (s1, r1) in &self.parts {
            for (s2, r2) in &o.parts {
                out.insert(s1 + s2, r1 * r2);
            }
        }
        out
    }

    /// Uses `d(phi^s) = s phi^(s-1) dphi`.
    pub fn derivative(&self, i: usize) -> Self {
        let dphi = self.phi.derivative(i);
        let one = Rational::from_integer(1.into());
        let mut out = Self::zero(&self.phi);
        for (s, r) in &self.parts {
            out.insert(s.clone(), r.derivative(i));
            if !s.is_zero() {
                out.insert(s - &one, (&dphi * r).scale(&rat(s)));
            }
        }
        out
    }
}

impl std::fmt::Debug for PhiRat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts = self.parts();
        if parts.is_empty() {
            return write!(f, "0");
        }
        let items: Vec<String> = parts.iter().map(|(s, r)| format!("phi^({}) * ({r})", fmt_rational(s))).collect();
        write!(f, "{}", items.join(" + "))
    }
}

/// `z0^w zb0^w' * body`, with `body` independent of `z0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmbientFunction {
    pub hom: Weight,
    pub body: PhiRat,
}

/// `xi^a` and `xi^bbar` for `a = 1..n+1`, and `r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransverseData {
    pub xi: Vec<RatFunc>,
    pub xib: Vec<RatFunc>,
    pub r: RatFunc,
}

/// A real polynomial `phi` on `C^(n+1)` with `J(phi)` a nonzero constant.
pub struct DefiningFunction {
    n: usize,
    vars: Arc<VarSet>,
    phi: Poly,
    phi_rat: Arc<RatFunc>,
    levi: (usize, usize),
    graph: Option<Signature>,
    j: RatFunc,
    transverse: TransverseData,
    g: RatMat,
    ginv: RatMat,
    phi_up: Vec<RatFunc>,
    phi_upb: Vec<RatFunc>,
}

impl DefiningFunction {
    /// Variables `z0..z(n+1), zb0..zb(n+1)`; index 0 is the fibre coordinate.
    pub fn ambient_vars(n: usize) -> Arc<VarSet> {
        let holo: Vec<String> = (0..=n + 1).map(|a| format!("z{a}")).collect();
        let anti: Vec<String> = (0..=n + 1).map(|a| format!("zb{a}")).collect();
        let h: Vec<&str> = holo.iter().map(String::as_str).collect();
        let b: Vec<&str> = anti.iter().map(String::as_str).collect();
        VarSet::complex(&h, &b, &[])
    }

    pub fn new(n: usize, phi: Poly, levi: (usize, usize)) -> Result<Self, AmbientError> {
        Self::build(n, phi, levi, None)
    }

    pub fn parse(n: usize, s: &str, levi: (usize, usize)) -> Result<Self, AmbientError> {
        let phi = parse_poly(s, &Self::ambient_vars(n))?;
        Self::new(n, phi, levi)
    }

    /// `Im z(n+1) - sum eps_a |z_a|^2`.
    pub fn heisenberg(sig: &Signature) -> Self {
        let n = sig.n();
        let vars = Self::ambient_vars(n);
        let m = n + 2;
        let w = &Poly::var(&vars, n + 1) - &Poly::var(&vars, m + n + 1);
        let mut phi = w.scale(&ExactScalar::imag(-1, 2));
        for a in 1..=n {
            let zz = &Poly::var(&vars, a) * &Poly::var(&vars, m + a);
            phi.sub_assign_ref(&zz.scale(&ExactScalar::int(sig.eps(a - 1))));
        }
        let levi = (sig.positive(), n - sig.positive());
        Self::build(n, phi, levi, Some(sig.clone())).expect("Heisenberg-type defining function")
    }

    /// `1 - sum |z_a|^2`.
    pub fn sphere(n: usize) -> Self {
        let vars = Self::ambient_vars(n);
        let m = n + 2;
        let mut phi = Poly::one(&vars);
        for a in 1..=n + 1 {
            phi.sub_assign_ref(&(&Poly::var(&vars, a) * &Poly::var(&vars, m + a)));
        }
        Self::new(n, phi, (n, 0)).expect("sphere-type defining function")
    }

    fn build(n: usize, phi: Poly, levi: (usize, usize), graph: Option<Signature>) -> Result<Self, AmbientError> {
        let vars = Self::ambient_vars(n);
        let phi = phi.embed(&vars)?;
        let m = n + 2;
        if !phi.is_real() || phi.degree_in(0) > 0 || phi.degree_in(m) > 0 {
            return Err(AmbientError::BadDefiningFunction);
        }
        let j = Self::bordered_det(n, &phi, levi.0);
        if !j.is_constant() || j.is_zero() {
            return Err(AmbientError::NonconstantJ(j.to_string()));
        }
        let phi_rat = Arc::new(RatFunc::from_poly(phi.clone()));
        let d = |i: usize| RatFunc::from_poly(phi.derivative(i));
        let hol = |a: usize| a;
        let anti = |a: usize| m + a;
        let idx: Vec<usize> = (1..=n + 1).collect();

        let mut lhs: RatMat = Vec::new();
        let mut rhs: RatMat = Vec::new();
        for &a in &idx {
            let mut row: Vec<RatFunc> = idx.iter().map(|&b| RatFunc::from_poly(phi.derivative(hol(a)).derivative(anti(b)))).collect();
            row.push(-&d(hol(a)));
            lhs.push(row);
            rhs.push(vec![RatFunc::zero(&vars)]);
        }
        let mut last: Vec<RatFunc> = idx.iter().map(|&b| d(anti(b))).collect();
        last.push(RatFunc::zero(&vars));
        lhs.push(last);
        rhs.push(vec![RatFunc::one(&vars)]);
        let sol: Vec<RatFunc> = gauss_jordan(lhs, rhs)?.into_iter().map(|mut v| v.remove(0)).collect();
        let xib = sol[..=n].to_vec();
        let r = sol[n + 1].clone();
        let xi = xib.iter().map(RatFunc::conj).collect();
        let transverse = TransverseData { xi, xib, r };

        let inv_phi = phi_rat.inv()?;
        let inv_phi2 = &inv_phi * &inv_phi;
        let g: RatMat = idx
            .iter()
            .map(|&a| {
                idx.iter()
                    .map(|&b| {
                        let h = RatFunc::from_poly(phi.derivative(hol(a)).derivative(anti(b)));
                        &(&inv_phi2 * &(&d(hol(a)) * &d(anti(b)))) - &(&inv_phi * &h)
                    })
                    .collect()
            })
            .collect();
        let ginv = invert(&transpose(&g))?;
        let phi_up = (0..=n).map(|a| (0..=n).fold(RatFunc::zero(&vars), |acc, b| &acc + &(&ginv[a][b] * &d(anti(b + 1))))).collect();
        let phi_upb = (0..=n).map(|b| (0..=n).fold(RatFunc::zero(&vars), |acc, a| &acc + &(&ginv[a][b] * &d(hol(a + 1))))).collect();
        Ok(Self { n, vars, phi, phi_rat, levi, graph, j: j.into(), transverse, g, ginv, phi_up, phi_upb })
    }

    fn bordered_det(n: usize, phi: &Poly, p: usize) -> Poly {
        let m = n + 2;
        let entry = |a: usize, b: usize| {
            let mut e = phi.clone();
            if a > 0 {
                e = e.derivative(a);
            }
            if b > 0 {
                e = e.derivative(m + b);
            }
            e
        };
        let mat: Vec<Vec<Poly>> = (0..=n + 1).map(|a| (0..=n + 1).map(|b| entry(a, b)).collect()).collect();
        let d = det(&mat);
        if p.is_multiple_of(2) {
            -d
        } else {
            d
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vars(&self) -> &Arc<VarSet> {
        &self.vars
    }

    pub fn phi(&self) -> &Poly {
        &self.phi
    }

    pub fn levi_signature(&self) -> (usize, usize) {
        self.levi
    }

    pub fn monge_ampere_j(&self) -> &RatFunc {
        &self.j
    }

    pub fn transverse_data(&self) -> &TransverseData {
        &self.transverse
    }

    /// `g_{a bbar}` for `a, b = 1..n+1`.
    pub fn kahler_metric(&self) -> &RatMat {
        &self.g
    }

    /// `g^{a bbar}` with `g^{a bbar} g_{c bbar} = delta^a_c`.
    pub fn kahler_inverse(&self) -> &RatMat {
        &self.ginv
    }

    /// `phi^a = g^{a bbar} phi_bbar`.
    pub fn raised_phi(&self) -> &[RatFunc] {
        &self.phi_up
    }

    fn hol(&self, a: usize) -> usize {
        a
    }

    fn anti(&self, a: usize) -> usize {
        self.n + 2 + a
    }

    fn rat(&self, p: Poly) -> RatFunc {
        RatFunc::from_poly(p)
    }

    fn d(&self, i: usize) -> RatFunc {
        self.rat(self.phi.derivative(i))
    }

    fn levi_entry(&self, a: usize, b: usize) -> RatFunc {
        self.rat(self.phi.derivative(self.hol(a)).derivative(self.anti(b)))
    }

    fn constant(&self, c: ExactScalar) -> RatFunc {
        RatFunc::constant(&self.vars, c)
    }

    fn one_minus_r_phi(&self) -> RatFunc {
        &RatFunc::one(&self.vars) - &(&self.transverse.r * &self.phi_rat)
    }

    pub fn phi_rat(&self) -> &Arc<RatFunc> {
        &self.phi_rat
    }

    /// `phi_{a bbar} xi^bbar - r phi_a`, `xi^a phi_a - 1`, and `phi_{a bbar} xi^a xi^bbar - r`.
    pub fn transverse_residuals(&self) -> Vec<RatFunc> {
        let td = &self.transverse;
        let k = self.n + 1;
        let mut out = Vec::new();
        for a in 1..=k {
            let s = (1..=k).fold(RatFunc::zero(&self.vars), |acc, b| &acc + &(&self.levi_entry(a, b) * &td.xib[b - 1]));
            out.push(&s - &(&td.r * &self.d(self.hol(a))));
        }
        let contr = (1..=k).fold(RatFunc::zero(&self.vars), |acc, a| &acc + &(&td.xi[a - 1] * &self.d(self.hol(a))));
        out.push(&contr - &RatFunc::one(&self.vars));
        let mut rr = RatFunc::zero(&self.vars);
        for a in 1..=k {
            for b in 1..=k {
                rr = &rr + &(&self.levi_entry(a, b) * &(&td.xi[a - 1] * &td.xib[b - 1]));
            }
        }
        out.push(&rr - &td.r);
        out
    }

    /// `phi^a - phi^2 (1 - r phi)^-1 xi^a` and `phi^a phi_a - phi^2 / (1 - r phi)`.
    pub fn raise_residuals(&self) -> Vec<RatFunc> {
        let q = (&*self.phi_rat * &*self.phi_rat).checked_div(&self.one_minus_r_phi()).expect("nonzero");
        let mut out: Vec<RatFunc> = self.phi_up.iter().zip(&self.transverse.xi).map(|(u, x)| u - &(&q * x)).collect();
        let s = self.phi_up.iter().enumerate().fold(RatFunc::zero(&self.vars), |acc, (a, u)| &acc + &(u * &self.d(self.hol(a + 1))));
        out.push(&s - &q);
        out
    }

    /// `g^{a bbar} phi_{a bbar} - phi (1 - r phi)^-1 ((n+1) r phi - n)`.
    pub fn trace_residual(&self) -> RatFunc {
        let k = self.n + 1;
        let mut tr = RatFunc::zero(&self.vars);
        for a in 1..=k {
            for b in 1..=k {
                tr = &tr + &(&self.ginv[a - 1][b - 1] * &self.levi_entry(a, b));
            }
        }
        let rphi = &self.transverse.r * &self.phi_rat;
        let inner = &rphi.scale(&ExactScalar::int(k as i64)) - &self.constant(ExactScalar::int(self.n as i64));
        let expect = (&*self.phi_rat * &inner).checked_div(&self.one_minus_r_phi()).expect("nonzero");
        &tr - &expect
    }

    /// `g~_{A Bbar} = d_A d_Bbar (-|z0|^2 phi)`, computed by differentiation.
    pub fn ambient_metric(&self) -> RatMat {
        let pot = -&(&(&Poly::var(&self.vars, self.hol(0)) * &Poly::var(&self.vars, self.anti(0))) * &self.phi);
        (0..=self.n + 1)
            .map(|a| (0..=self.n + 1).map(|b| self.rat(pot.derivative(self.hol(a)).derivative(self.anti(b)))).collect())
            .collect()
    }

    /// The product of the three block factors of `g~`, with half-integral powers of `phi`.
    pub fn factored_ambient_metric(&self) -> Vec<Vec<PhiRat>> {
        let k = self.n + 1;
        let ph = &self.phi_rat;
        let half = Rational::new(1.into(), 2.into());
        let mhalf = -half.clone();
        let z0 = self.rat(Poly::var(&self.vars, self.hol(0)));
        let zb0 = self.rat(Poly::var(&self.vars, self.anti(0)));
        let zero = || PhiRat::zero(ph);
        let size = k + 1;
        let mut left = vec![vec![zero(); size]; size];
        let mut right = vec![vec![zero(); size]; size];
        let mut mid = vec![vec![zero(); size]; size];
        left[0][0] = PhiRat::phi_pow(ph, &half, RatFunc::one(&self.vars));
        right[0][0] = left[0][0].clone();
        mid[0][0] = PhiRat::from_rat(ph, self.constant(ExactScalar::int(-1)));
        for a in 1..=k {
            left[a][0] = PhiRat::phi_pow(ph, &mhalf, &z0 * &self.d(self.hol(a)));
            left[a][a] = PhiRat::phi_pow(ph, &half, z0.clone());
            right[0][a] = PhiRat::phi_pow(ph, &mhalf, &zb0 * &self.d(self.anti(a)));
            right[a][a] = PhiRat::phi_pow(ph, &half, zb0.clone());
            for b in 1..=k {
                mid[a][b] = PhiRat::from_rat(ph, self.g[a - 1][b - 1].clone());
            }
        }
        let prod = |x: &Vec<Vec<PhiRat>>, y: &Vec<Vec<PhiRat>>| -> Vec<Vec<PhiRat>> {
            (0..size).map(|i| (0..size).map(|j| (0..size).fold(zero(), |acc, l| acc.add(&x[i][l].mul(&y[l][j])))).collect()).collect()
        };
        prod(&prod(&left, &mid), &right)
    }

    /// `(|z0|^2 phi) g~^{A Bbar}` assembled from the displayed blocks.
    pub fn scaled_ambient_inverse(&self) -> RatMat {
        let k = self.n + 1;
        let z0 = self.rat(Poly::var(&self.vars, self.hol(0)));
        let zb0 = self.rat(Poly::var(&self.vars, self.anti(0)));
        let zz = &z0 * &zb0;
        let blocks = self.reduced_inverse_blocks();
        let mut out = vec![vec![RatFunc::zero(&self.vars); k + 1]; k + 1];
        out[0][0] = &zz * &blocks[0][0];
        for a in 1..=k {
            out[0][a] = &z0 * &blocks[0][a];
            out[a][0] = &zb0 * &blocks[a][0];
            for b in 1..=k {
                out[a][b] = blocks[a][b].clone();
            }
        }
        out
    }

    /// The inverse blocks with the `z0` factors stripped.
    fn reduced_inverse_blocks(&self) -> RatMat {
        let k = self.n + 1;
        let inv_phi = self.phi_rat.inv().expect("nonzero");
        let sq = self.phi_up.iter().enumerate().fold(RatFunc::zero(&self.vars), |acc, (a, u)| &acc + &(u * &self.d(self.hol(a + 1))));
        let mut out = vec![vec![RatFunc::zero(&self.vars); k + 1]; k + 1];
        out[0][0] = &(&sq * &(&inv_phi * &inv_phi)) - &RatFunc::one(&self.vars);
        for a in 1..=k {
            out[0][a] = -&(&inv_phi * &self.phi_upb[a - 1]);
            out[a][0] = -&(&inv_phi * &self.phi_up[a - 1]);
            for b in 1..=k {
                out[a][b] = self.ginv[a - 1][b - 1].clone();
            }
        }
        out
    }

    /// True when the factored form reassembles `g~` exactly.
    pub fn check_factorization(&self) -> bool {
        let direct = self.ambient_metric();
        let fac = self.factored_ambient_metric();
        direct.iter().flatten().zip(fac.iter().flatten()).all(|(d, f)| PhiRat::from_rat(&self.phi_rat, d.clone()) == *f)
    }

    /// True when the displayed inverse contracts with `g~` to `|z0|^2 phi` times the identity.
    pub fn check_inverse(&self) -> bool {
        let g = self.ambient_metric();
        let inv = self.scaled_ambient_inverse();
        let scale = &self.rat(&Poly::var(&self.vars, self.hol(0)) * &Poly::var(&self.vars, self.anti(0))) * &self.phi_rat;
        let size = self.n + 2;
        (0..size).all(|a| {
            (0..size).all(|c| {
                let s = (0..size).fold(RatFunc::zero(&self.vars), |acc, b| &acc + &(&inv[a][b] * &g[c][b]));
                s == if a == c { scale.clone() } else { RatFunc::zero(&self.vars) }
            })
        })
    }

    /// `phi^-1 g^{a bbar}` has no pole along `phi = 0`.
    pub fn inverse_metric_extends(&self) -> bool {
        let inv_phi = self.phi_rat.inv().expect("nonzero");
        self.ginv.iter().flatten().all(|e| {
            let q = &inv_phi * e;
            gcd(q.den(), &self.phi).is_constant()
        })
    }

    fn phirat(&self, r: RatFunc) -> PhiRat {
        PhiRat::from_rat(&self.phi_rat, r)
    }

    /// `Delta_g u = -g^{a bbar} d_a d_bbar u`.
    pub fn delta_g(&self, u: &PhiRat) -> PhiRat {
        let k = self.n + 1;
        let mut acc = PhiRat::zero(&self.phi_rat);
        for a in 1..=k {
            let da = u.derivative(self.hol(a));
            for b in 1..=k {
                acc = acc.sub(&da.derivative(self.anti(b)).mul_rat(&self.ginv[a - 1][b - 1]));
            }
        }
        acc
    }

    /// `(|z0|^2 phi) Delta~ F`, with fibre derivatives taken through homogeneity.
    pub fn ambient_laplacian(&self, f: &AmbientFunction) -> AmbientFunction {
        let k = self.n + 1;
        let b = self.reduced_inverse_blocks();
        let (w, wp) = (rat(&f.hom.w), rat(&f.hom.wp));
        let g = &f.body;
        let mut acc = g.mul_rat(&b[0][0]).scale(&(&w * &wp));
        for a in 1..=k {
            acc = acc.add(&g.derivative(self.anti(a)).mul_rat(&b[0][a]).scale(&w));
            acc = acc.add(&g.derivative(self.hol(a)).mul_rat(&b[a][0]).scale(&wp));
        }
        let body = acc.scale(&ExactScalar::int(-1)).add(&self.delta_g(g));
        AmbientFunction { hom: f.hom.clone(), body }
    }

    fn fibre_factor(&self, hom: &Weight) -> Result<RatFunc, AmbientError> {
        let int = |r: &Rational| -> Result<i32, AmbientError> {
            if !r.is_integer() {
                return Err(AmbientError::NonIntegral(hom.to_string()));
            }
            r.to_integer().try_into().map_err(|_| AmbientError::NonIntegral(hom.to_string()))
        };
        let z0 = self.rat(Poly::var(&self.vars, self.hol(0))).pow(int(&hom.w)?)?;
        let zb0 = self.rat(Poly::var(&self.vars, self.anti(0))).pow(int(&hom.wp)?)?;
        Ok(&z0 * &zb0)
    }

    /// `(|z0|^2 phi) Delta~ F` by inverting `g~` in all coordinates; integral homogeneity only.
    pub fn ambient_laplacian_direct(&self, f: &AmbientFunction) -> Result<RatFunc, AmbientError> {
        let body = f.body.as_rat().ok_or_else(|| AmbientError::NonIntegral(format!("{:?}", f.body)))?;
        let full = &self.fibre_factor(&f.hom)? * &body;
        let ginv = invert(&transpose(&self.ambient_metric()))?;
        let size = self.n + 2;
        let mut acc = RatFunc::zero(&self.vars);
        for a in 0..size {
            let da = full.derivative(self.hol(a));
            for b in 0..size {
                acc = &acc - &(&ginv[a][b] * &da.derivative(self.anti(b)));
            }
        }
        let scale = &self.rat(&Poly::var(&self.vars, self.hol(0)) * &Poly::var(&self.vars, self.anti(0))) * &self.phi_rat;
        Ok(&acc * &scale)
    }

    /// Lifts `F` to a rational function of all ambient coordinates.
    pub fn expand(&self, f: &AmbientFunction) -> Result<RatFunc, AmbientError> {
        let body = f.body.as_rat().ok_or_else(|| AmbientError::NonIntegral(format!("{:?}", f.body)))?;
        Ok(&self.fibre_factor(&f.hom)? * &body)
    }

    /// Random polynomials of degree at most two in `z1..z(n+1)` and their conjugates.
    pub fn random_functions(&self, seed: u64, count: usize) -> Vec<RatFunc> {
        let mut s = crate::sample::Sampler::new(seed);
        let k = self.n + 1;
        let names: Vec<String> = (1..=k).map(|a| format!("z{a}")).chain((1..=k).map(|a| format!("zb{a}"))).collect();
        let h: Vec<&str> = names[..k].iter().map(String::as_str).collect();
        let b: Vec<&str> = names[k..].iter().map(String::as_str).collect();
        let small = VarSet::complex(&h, &b, &[]);
        (0..count).map(|_| RatFunc::from_poly(s.poly(&small, 2, 3).embed(&self.vars).expect("subset of ambient variables"))).collect()
    }

    /// `Delta_{w,w'} u`.
    pub fn delta_ww(&self, w: &Weight, u: &PhiRat) -> PhiRat {
        let k = self.n + 1;
        let omr = self.one_minus_r_phi();
        let inv_phi = self.phi_rat.inv().expect("nonzero");
        let (ew, ewp) = (rat(&w.w), rat(&w.wp));
        let mut acc = self.delta_g(u).mul_rat(&inv_phi);
        for a in 1..=k {
            let xa = self.transverse.xi[a - 1].checked_div(&omr).expect("nonzero");
            let xb = self.transverse.xib[a - 1].checked_div(&omr).expect("nonzero");
            acc = acc.add(&u.derivative(self.hol(a)).mul_rat(&xa).scale(&ewp));
            acc = acc.add(&u.derivative(self.anti(a)).mul_rat(&xb).scale(&ew));
        }
        let y = self.transverse.r.checked_div(&omr).expect("nonzero");
        acc.sub(&u.mul_rat(&y).scale(&(&ew * &ewp)))
    }

    /// Residual of `(phi |z0|^2) Delta~ = phi Delta_{w,w'}` on `z0^w zb0^w' u`.
    pub fn homogeneous_identity_residual(&self, w: &Weight, u: &RatFunc) -> Result<RatFunc, AmbientError> {
        let f = AmbientFunction { hom: w.clone(), body: self.phirat(u.clone()) };
        let lhs = self.ambient_laplacian_direct(&f)?;
        let inner = self.delta_ww(w, &f.body).mul_rat(&self.phi_rat);
        let rhs = self.expand(&AmbientFunction { hom: w.clone(), body: inner })?;
        Ok(&lhs - &rhs)
    }

    /// Residual of `Delta~(|z0|^(2w) phi^w u) = (|z0|^2 phi)^(w-1) (Delta_g + w(n+1+w)) u`.
    pub fn scattering_residual(&self, w: &Rational, u: &RatFunc) -> PhiRat {
        let hom = Weight::new(w.clone(), w.clone()).expect("equal weights");
        let body = PhiRat::phi_pow(&self.phi_rat, w, u.clone());
        let lhs = self.ambient_laplacian(&AmbientFunction { hom, body }).body;
        let c = w * (Rational::from_integer((self.n as i64 + 1).into()) + w);
        let inner = self.delta_g(&self.phirat(u.clone())).add(&self.phirat(u.scale(&rat(&c))));
        let rhs = inner.mul(&PhiRat::phi_pow(&self.phi_rat, w, RatFunc::one(&self.vars)));
        lhs.sub(&rhs)
    }

    /// Adapted coordinates `(z_a, zb_a, s, rho)` for a Heisenberg-type defining function.
    pub fn adapted(&self) -> Result<Adapted<'_>, AmbientError> {
        let sig = self.graph.clone().ok_or(AmbientError::NoAdaptedCoordinates)?;
        Ok(Adapted::new(self, sig))
    }
}

/// Coordinates `(z_a, zb_a, s, rho)` with `s = Re z(n+1)` and `rho = phi`.
pub struct Adapted<'a> {
    df: &'a DefiningFunction,
    sig: Signature,
    vars: Arc<VarSet>,
    old_to_new: Vec<Poly>,
}

impl<'a> Adapted<'a> {
    fn new(df: &'a DefiningFunction, sig: Signature) -> Self {
        let n = df.n;
        let holo: Vec<String> = (1..=n).map(|a| format!("z{a}")).collect();
        let anti: Vec<String> = (1..=n).map(|a| format!("zb{a}")).collect();
        let h: Vec<&str> = holo.iter().map(String::as_str).collect();
        let b: Vec<&str> = anti.iter().map(String::as_str).collect();
        let vars = VarSet::complex(&h, &b, &["s", "rho"]);
        let (s, rho) = (Poly::var(&vars, 2 * n), Poly::var(&vars, 2 * n + 1));
        let mut v = rho.clone();
        for a in 0..n {
            let zz = &Poly::var(&vars, a) * &Poly::var(&vars, n + a);
            v.add_assign_ref(&zz.scale(&ExactScalar::int(sig.eps(a))));
        }
        let iv = v.scale(&ExactScalar::i());
        let m = n + 2;
        let mut old_to_new = vec![Poly::zero(&vars); 2 * m];
        for a in 1..=n {
            old_to_new[a] = Poly::var(&vars, a - 1);
            old_to_new[m + a] = Poly::var(&vars, n + a - 1);
        }
        old_to_new[n + 1] = &s + &iv;
        old_to_new[m + n + 1] = &s - &iv;
        Self { df, sig, vars, old_to_new }
    }

    pub fn vars(&self) -> &Arc<VarSet> {
        &self.vars
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    fn rho_var(&self) -> usize {
        2 * self.df.n + 1
    }

    fn convert(&self, r: &RatFunc) -> Result<Poly, AmbientError> {
        let p = r.as_poly().ok_or_else(|| AmbientError::NotPolynomial(r.to_string()))?;
        Ok(p.compose(&self.old_to_new))
    }

    /// The ambient coordinate derivative `d/dx_i` written in adapted coordinates.
    fn chain(&self, i: usize) -> Operator {
        let df = self.df;
        let n = df.n;
        let m = n + 2;
        let mut op = Operator::zero(&self.vars);
        let mut add = |coef: Poly, j: usize| {
            if !coef.is_zero() {
                op = op.add(&Operator::multiplication(&coef).compose(&Operator::partial(&self.vars, j)));
            }
        };
        for a in 1..=n {
            if i == a {
                add(Poly::one(&self.vars), a - 1);
            }
            if i == m + a {
                add(Poly::one(&self.vars), n + a - 1);
            }
        }
        if i == n + 1 || i == m + n + 1 {
            add(Poly::constant(&self.vars, ExactScalar::frac(1, 2)), 2 * n);
        }
        add(df.phi.derivative(i).compose(&self.old_to_new), self.rho_var());
        op
    }

    /// `Delta_{w,w'}` as a differential operator in adapted coordinates.
    pub fn delta_ww(&self, w: &Weight) -> Result<Operator, AmbientError> {
        let df = self.df;
        let k = df.n + 1;
        let omr = df.one_minus_r_phi();
        let inv_phi = df.phi_rat.inv()?;
        let (ew, ewp) = (rat(&w.w), rat(&w.wp));
        let mul = |r: &RatFunc| -> Result<Operator, AmbientError> { Ok(Operator::multiplication(&self.convert(r)?)) };
        let mut op = Operator::zero(&self.vars);
        for a in 1..=k {
            let da = self.chain(df.hol(a));
            for b in 1..=k {
                let c = &inv_phi * &df.ginv[a - 1][b - 1];
                let term = mul(&c)?.compose(&da).compose(&self.chain(df.anti(b)));
                op = op.sub(&term);
            }
            let xa = df.transverse.xi[a - 1].checked_div(&omr)?;
            let xb = df.transverse.xib[a - 1].checked_div(&omr)?;
            op = op.add(&mul(&xa)?.compose(&da).scale(&ewp));
            op = op.add(&mul(&xb)?.compose(&self.chain(df.anti(a))).scale(&ew));
        }
        let y = df.transverse.r.checked_div(&omr)?;
        Ok(op.sub(&mul(&y)?.scale(&(&ew * &ewp))))
    }

    /// Boundary polynomial in Heisenberg variables `(z, zb, t)` to adapted coordinates, `t = s/2`.
    pub fn from_boundary(&self, f: &Poly) -> Poly {
        let n = self.df.n;
        let mut images: Vec<Poly> = (0..2 * n).map(|i| Poly::var(&self.vars, i)).collect();
        images.push(Poly::var(&self.vars, 2 * n).scale(&ExactScalar::frac(1, 2)));
        f.compose(&images)
    }

    /// Restriction to `rho = 0` in Heisenberg variables, `s = 2t`.
    pub fn to_boundary(&self, p: &Poly) -> Poly {
        let n = self.df.n;
        let hv = VarSet::heisenberg(n);
        let mut images: Vec<Poly> = (0..2 * n).map(|i| Poly::var(&hv, i)).collect();
        images.push(Poly::var(&hv, 2 * n).scale(&ExactScalar::int(2)));
        images.push(Poly::zero(&hv));
        p.compose(&images)
    }

    /// The raw obstruction to solving `Delta_{w,w'} u = 0` formally with `u|_M = f`.
    pub fn obstruction(&self, w: &Weight, f: &Poly, k: u32) -> Result<Poly, AmbientError> {
        let n = self.df.n;
        let total = Rational::from_integer((n as i64 + 1).into()) + &w.w + &w.wp;
        if total != Rational::from_integer((k as i64).into()) || k == 0 {
            return Err(AmbientError::WeightMismatch(w.to_string(), k));
        }
        let op = self.delta_ww(w)?;
        let rho = self.rho_var();
        let coeff = |p: &Poly, j: u32| p.split_var(rho).remove(&(j as u16)).unwrap_or_else(|| Poly::zero(&self.vars));
        let mut u = self.from_boundary(f);
        for j in 1..k {
            let e = op.apply(&u);
            let rj = Poly::var(&self.vars, rho).pow(j);
            let ind = coeff(&op.apply(&rj), j - 1).as_constant().filter(|c| !c.is_zero()).ok_or(AmbientError::Indicial(j, k))?;
            let c = coeff(&e, j - 1);
            u.add_assign_ref(&(&rj * &c).scale(&(-ind.inv()?)));
        }
        Ok(self.to_boundary(&coeff(&op.apply(&u), k - 1)))
    }
}

/// The scalar `c` with `a_i = c b_i` for all pairs, if one exists and some `b_i` is nonzero.
pub fn proportionality(pairs: &[(Poly, Poly)]) -> Option<ExactScalar> {
    let (a0, b0) = pairs.iter().find(|(_, b)| !b.is_zero())?;
    let (m, bc) = b0.leading()?;
    let c = a0.coeff(m).checked_div(bc).ok()?;
    pairs.iter().all(|(a, b)| *a == b.scale(&c)).then_some(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heisenberg::{Frame, Signature, Weight};
    use crate::invariant_ops::box_power;
    use crate::sample::Sampler;
    use crate::scalars::rat as q;
    use crate::structures::PhStructure;
    use crate::tractor::Tractor;

    fn definite(n: usize) -> Signature {
        Signature::definite(n)
    }

    #[test]
    fn j_is_constant_for_model_hypersurfaces() {
        let h = DefiningFunction::heisenberg(&definite(1));
        assert_eq!(h.monge_ampere_j().as_poly().unwrap().as_constant(), Some(ExactScalar::frac(1, 4)));
        let s = DefiningFunction::sphere(1);
        assert_eq!(s.monge_ampere_j().as_poly().unwrap().as_constant(), Some(ExactScalar::int(1)));
        let h2 = DefiningFunction::heisenberg(&Signature::new(vec![1, -1]).unwrap());
        assert!(h2.monge_ampere_j().as_poly().unwrap().as_constant().is_some());
        assert!(DefiningFunction::parse(1, "1 - z1*zb1 - z2*zb2 - z1*zb1*z2*zb2", (1, 0)).is_err());
    }

    #[test]
    fn j_scales_with_phi() {
        let s = DefiningFunction::sphere(1);
        let two = DefiningFunction::new(1, s.phi().scale(&ExactScalar::int(2)), (1, 0)).unwrap();
        assert_eq!(two.monge_ampere_j(), &s.monge_ampere_j().scale(&ExactScalar::int(8)));
    }

    #[test]
    fn sphere_transverse_data() {
        let s = DefiningFunction::sphere(1);
        let v = s.vars().clone();
        let norm = parse_poly("z1*zb1 + z2*zb2", &v).unwrap();
        let td = s.transverse_data();
        assert_eq!(td.r, RatFunc::new(Poly::constant(&v, ExactScalar::int(-1)), norm.clone()).unwrap());
        for a in 1..=2 {
            let expect = RatFunc::new(-&Poly::var(&v, a), norm.clone()).unwrap();
            assert_eq!(td.xi[a - 1], expect);
        }
    }

    #[test]
    fn transverse_identities_hold() {
        for df in [
            DefiningFunction::sphere(1),
            DefiningFunction::heisenberg(&definite(1)),
            DefiningFunction::heisenberg(&Signature::new(vec![1, -1]).unwrap()),
            DefiningFunction::sphere(2),
        ] {
            assert!(df.transverse_residuals().iter().all(RatFunc::is_zero));
            assert!(df.raise_residuals().iter().all(RatFunc::is_zero));
            assert!(df.trace_residual().is_zero());
            assert!(df.inverse_metric_extends());
        }
    }

    #[test]
    fn metric_factorization_and_inverse() {
        for df in [DefiningFunction::sphere(1), DefiningFunction::heisenberg(&definite(1))] {
            assert!(df.check_factorization());
            assert!(df.check_inverse());
        }
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let df = DefiningFunction::sphere(1);
        let f = AmbientFunction { hom: Weight::zero(), body: PhiRat::from_rat(df.phi_rat(), RatFunc::one(df.vars())) };
        assert!(df.ambient_laplacian(&f).body.is_zero());
    }

    #[test]
    fn block_laplacian_matches_direct_inverse() {
        let df = DefiningFunction::heisenberg(&definite(1));
        for (i, u) in df.random_functions(3, 3).into_iter().enumerate() {
            let hom = Weight::ints(i as i64 - 1, 1 - i as i64);
            let f = AmbientFunction { hom, body: PhiRat::from_rat(df.phi_rat(), u) };
            let block = df.expand(&df.ambient_laplacian(&f)).unwrap();
            assert_eq!(block, df.ambient_laplacian_direct(&f).unwrap());
        }
    }

    #[test]
    fn homogeneous_laplacian_identity() {
        for df in [DefiningFunction::heisenberg(&definite(1)), DefiningFunction::sphere(1)] {
            for (i, u) in df.random_functions(5, 3).into_iter().enumerate() {
                let w = Weight::ints(i as i64 - 1, 2 - 2 * i as i64);
                assert!(df.homogeneous_identity_residual(&w, &u).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn scattering_identity() {
        for df in [DefiningFunction::heisenberg(&definite(1)), DefiningFunction::sphere(1)] {
            for w in [q(0, 1), q(-1, 1), q(-1, 2), q(1, 3)] {
                for u in df.random_functions(9, 2) {
                    assert!(df.scattering_residual(&w, &u).is_zero(), "w = {w}");
                }
            }
        }
    }

    #[test]
    fn half_powers_multiply() {
        let df = DefiningFunction::sphere(1);
        let ph = df.phi_rat();
        let h = PhiRat::phi_pow(ph, &q(1, 2), RatFunc::one(df.vars()));
        assert_eq!(h.mul(&h), PhiRat::from_rat(ph, (**ph).clone()));
        let d = h.derivative(1).mul(&h);
        assert_eq!(d, PhiRat::from_rat(ph, ph.derivative(1).scale(&ExactScalar::frac(1, 2))));
    }

    fn boundary_samples(seed: u64, count: usize) -> Vec<Poly> {
        let mut s = Sampler::new(seed);
        (0..count).map(|_| s.poly(&VarSet::heisenberg(1), 4, 4)).collect()
    }

    fn flat_power(w: &Weight, k: u32) -> Operator {
        let tr = Tractor::new(&PhStructure::flat(&definite(1)));
        box_power(&tr, w, k).op.scale(&ExactScalar::int((-2i64).pow(k)))
    }

    #[test]
    fn obstruction_is_a_multiple_of_the_invariant_operator() {
        let df = DefiningFunction::heisenberg(&definite(1));
        let ad = df.adapted().unwrap();
        let fs = boundary_samples(11, 5);
        for (k, c, ws) in
            [(1, ExactScalar::frac(1, 2), [(0, -1), (-1, 0), (1, -2)]), (2, ExactScalar::frac(-1, 4), [(0, 0), (1, -1), (-2, 2)])]
        {
            for (a, b) in ws {
                let w = Weight::ints(a, b);
                let p = flat_power(&w, k);
                let pairs: Vec<_> = fs.iter().map(|f| (ad.obstruction(&w, f, k).unwrap(), p.apply(f))).collect();
                assert_eq!(proportionality(&pairs), Some(c.clone()), "w = {w}");
            }
        }
    }

    #[test]
    fn obstruction_commutes_with_translations() {
        let df = DefiningFunction::heisenberg(&definite(1));
        let ad = df.adapted().unwrap();
        let fr = Frame::new(&definite(1));
        let a = [ExactScalar::new(q(1, 1), q(-1, 2))];
        let s = ExactScalar::frac(3, 2);
        let w = Weight::ints(1, -1);
        for f in boundary_samples(4, 3) {
            let lhs = ad.obstruction(&w, &fr.translate(&f, &a, &s), 2).unwrap();
            assert_eq!(lhs, fr.translate(&ad.obstruction(&w, &f, 2).unwrap(), &a, &s));
        }
    }

    #[test]
    fn obstruction_rejects_wrong_order() {
        let df = DefiningFunction::heisenberg(&definite(1));
        let ad = df.adapted().unwrap();
        let f = boundary_samples(1, 1).remove(0);
        assert!(matches!(ad.obstruction(&Weight::ints(0, -1), &f, 2), Err(AmbientError::WeightMismatch(..))));
        assert!(DefiningFunction::sphere(1).adapted().is_err());
    }
}
