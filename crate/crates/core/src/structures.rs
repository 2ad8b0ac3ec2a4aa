//! Pseudohermitian structures `theta_hat = e^Upsilon theta` over the flat Heisenberg structure.
//!
//! All components are stored in the fixed flat trivialization. A rescaled structure
//! computes its connection from the connection one layer down via the rescaling laws,
//! so structures can be stacked: rescaling by `U1` and then by `U2` (with `U2`'s
//! derivatives taken in the `U1` structure) must agree with rescaling by `U1 + U2`.

use num_traits::Zero;

use crate::heisenberg::{Coeff, Dir, Field, Frame, Key, Signature, Slot, Weight};
use crate::scalars::{ExactScalar, Poly};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StructureError {
    #[error("rescaling function must be real, got {0}")]
    NonReal(String),
    #[error("rescaling function is over the wrong variables")]
    WrongVars,
}

fn c(p: i64, q: i64) -> ExactScalar {
    ExactScalar::frac(p, q)
}

fn ci(p: i64, q: i64) -> ExactScalar {
    ExactScalar::imag(p, q)
}

/// Pseudohermitian curvature and torsion in the weighted formalism.
///
/// Weights: `a` and `p` are `(0,0)`, `p_trace` is `(-1,-1)`, `t` is `(-1,-1)`,
/// `s` is `(-2,-2)` and `r` is `(1,1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureData {
    /// Torsion `A_ab`, slots `[Hol, Hol]`.
    pub a: Field<Poly>,
    /// `P_{a bbar}`, slots `[Hol, Anti]`.
    pub p: Field<Poly>,
    /// `P = P_a^a`.
    pub p_trace: Poly,
    /// `T_a`, slot `[Hol]`.
    pub t: Field<Poly>,
    /// `S`.
    pub s: Poly,
    /// `R_{a bbar c dbar}`, slots `[Hol, Anti, Hol, Anti]`.
    pub r: Field<Poly>,
}

impl CurvatureData {
    pub fn flat(sig: &Signature) -> Self {
        let fr = Frame::new(sig);
        let v = fr.vars();
        Self {
            a: Field::zero(sig, Weight::zero(), vec![Slot::Hol, Slot::Hol]),
            p: Field::zero(sig, Weight::zero(), vec![Slot::Hol, Slot::Anti]),
            p_trace: Poly::zero(v),
            t: Field::zero(sig, Weight::ints(-1, -1), vec![Slot::Hol]),
            s: Poly::zero(v),
            r: Field::zero(sig, Weight::ints(1, 1), vec![Slot::Hol, Slot::Anti, Slot::Hol, Slot::Anti]),
        }
    }

    /// `R_{a bbar c dbar} = P_ab h_cd + P_cd h_ab + P_ad h_cb + P_cb h_ad`.
    pub fn r_from_p(p: &Field<Poly>) -> Field<Poly> {
        let sig = p.sig().clone();
        let v = p.vars().clone();
        Field::from_fn(&sig, Weight::ints(1, 1), vec![Slot::Hol, Slot::Anti, Slot::Hol, Slot::Anti], |k| {
            let (a, b, cc, d) = (k[0] as usize, k[1] as usize, k[2] as usize, k[3] as usize);
            let h = |x: usize, y: usize| if x == y { sig.eps(x) } else { 0 };
            let mut acc = Poly::zero(&v);
            for (pa, pb, ha, hb) in [(a, b, cc, d), (cc, d, a, b), (a, d, cc, b), (cc, b, a, d)] {
                let e = h(ha, hb);
                if e != 0 {
                    acc.add_scaled(&ExactScalar::int(e), &p.comp(&[pa as u8, pb as u8]));
                }
            }
            acc
        })
    }

    /// Ricci contraction `R_{a bbar} = R_c^c_{a bbar}`.
    pub fn ricci(&self) -> Field<Poly> {
        self.r.contract(0, 1)
    }
}

impl Field<Poly> {
    /// Same components under a different declared weight.
    pub fn reweight(&self, w: Weight) -> Field<Poly> {
        let mut r = self.with_shape(w, self.slots().to_vec());
        for (k, c) in self.iter() {
            r.set(k.clone(), c.clone());
        }
        r
    }
}

/// Derivatives of a rescaling function relative to a base structure.
#[derive(Clone, Debug)]
pub struct Jet {
    pub upsilon: Poly,
    /// `U_a`
    pub hol: Vec<Poly>,
    /// `U_abar`
    pub anti: Vec<Poly>,
    /// `U_0`, weight `(-1,-1)`.
    pub zero: Poly,
    /// `U_{ab} = nabla_b nabla_a U`, key `[a, b]`.
    pub hh: Field<Poly>,
    /// `U_{a bbar} = nabla_bbar nabla_a U`, key `[a, b]`.
    pub ha: Field<Poly>,
    /// `U_{abar b} = nabla_b nabla_abar U`, key `[a, b]`.
    pub ah: Field<Poly>,
    /// `U_{0a} = nabla_a nabla_0 U`, weight `(-1,-1)`.
    pub zh: Field<Poly>,
    /// `U_{00}`, weight `(-2,-2)`.
    pub zz: Poly,
    /// `U^c U_c`, weight `(-1,-1)`.
    pub sq: Poly,
    /// Zero-direction index correction for a lower holomorphic index, `m[a][b]`.
    m: Vec<Vec<Poly>>,
    /// Its conjugate for a lower antiholomorphic index.
    mbar: Vec<Vec<Poly>>,
    /// `(1/(n+2)) (U_0, i U^c_c, -i U^cbar_cbar, i U^c U_c)` building blocks.
    w_zero: [Poly; 3],
}

impl Jet {
    /// Computes the jet of `upsilon` with respect to `base`.
    pub fn new(base: &PhStructure, upsilon: &Poly) -> Self {
        let sig = base.sig().clone();
        let n = sig.n();
        let u = Field::scalar(&sig, Weight::zero(), upsilon.clone());
        let dh = base.nabla_ph(&u, Dir::Hol);
        let da = base.nabla_ph(&u, Dir::Anti);
        let d0 = base.nabla_ph(&u, Dir::Zero);
        let hh = base.nabla_ph(&dh, Dir::Hol);
        let ha = base.nabla_ph(&dh, Dir::Anti);
        let ah = base.nabla_ph(&da, Dir::Hol);
        let zh = base.nabla_ph(&d0, Dir::Hol);
        let zz = base.nabla_ph(&d0, Dir::Zero).value();
        let hol: Vec<Poly> = (0..n).map(|a| dh.comp(&[a as u8])).collect();
        let anti: Vec<Poly> = (0..n).map(|a| da.comp(&[a as u8])).collect();
        let v = base.frame().vars().clone();
        let e = |a: usize| ExactScalar::int(sig.eps(a));
        let mut sq = Poly::zero(&v);
        for g in 0..n {
            sq.add_scaled(&e(g), &(&anti[g] * &hol[g]));
        }
        // m[a][b] = -i (U^b_a - U^b U_a) with U^b_a = eps_b U_{bbar a}
        let m: Vec<Vec<Poly>> = (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| {
                        let inner = &ah.comp(&[b as u8, a as u8]) - &(&anti[b] * &hol[a]);
                        inner.scale(&(&e(b) * &ci(-1, 1)))
                    })
                    .collect()
            })
            .collect();
        let mbar = m.iter().map(|row| row.iter().map(Poly::conj).collect()).collect();
        let mut tr_h = Poly::zero(&v);
        let mut tr_a = Poly::zero(&v);
        for g in 0..n {
            tr_h.add_scaled(&e(g), &ah.comp(&[g as u8, g as u8]));
            tr_a.add_scaled(&e(g), &ha.comp(&[g as u8, g as u8]));
        }
        let inv = c(1, n as i64 + 2);
        let zero = d0.value();
        // W0 = inv [ (w+w') U_0 + i w (U^c_c - U^cU_c) - i w' (U^cbar_cbar - U^cU_c) ]
        let w_zero = [zero.scale(&inv), (&tr_h - &sq).scale(&(&inv * &ci(1, 1))), (&tr_a - &sq).scale(&(&inv * &ci(-1, 1)))];
        Self { upsilon: upsilon.clone(), hol, anti, zero, hh, ha, ah, zh, zz, sq, m, mbar, w_zero }
    }

    /// `U^a = eps_a U_abar`.
    pub fn up(&self, sig: &Signature, a: usize) -> Poly {
        self.anti[a].scale(&ExactScalar::int(sig.eps(a)))
    }

    /// `U^abar = eps_a U_a`.
    pub fn up_bar(&self, sig: &Signature, a: usize) -> Poly {
        self.hol[a].scale(&ExactScalar::int(sig.eps(a)))
    }

    fn weight_zero_term(&self, w: &Weight) -> Poly {
        let mut acc = self.w_zero[0].scale(&ExactScalar::real(&w.w + &w.wp));
        acc.add_scaled(&ExactScalar::real(w.w.clone()), &self.w_zero[1]);
        acc.add_scaled(&ExactScalar::real(w.wp.clone()), &self.w_zero[2]);
        acc
    }
}

/// One Greek index position of a component, possibly induced by a tractor slot.
struct GreekPos {
    pos: usize,
    kind: Slot,
    value: usize,
    tractor: bool,
}

fn component_shape(slots: &[Slot], key: &[u8], base: &Weight, n: usize) -> (Weight, Vec<GreekPos>) {
    let mut w = base.clone();
    let mut gs = Vec::new();
    for (pos, (&s, &v)) in slots.iter().zip(key).enumerate() {
        let sh = s.shape(v as usize, n);
        if sh.dw != 0 || sh.dwp != 0 {
            w = w.shift(sh.dw, sh.dwp);
        }
        if let Some(kind) = sh.greek {
            let tractor = s.is_tractor();
            let value = if tractor { v as usize - 1 } else { v as usize };
            gs.push(GreekPos { pos, kind, value, tractor });
        }
    }
    (w, gs)
}

fn with_value(key: &[u8], g: &GreekPos, x: usize) -> Key {
    let mut k = key.to_vec();
    k[g.pos] = (x + usize::from(g.tractor)) as u8;
    k
}

fn pushed(mut k: Key, c: usize) -> Key {
    k.push(c as u8);
    k
}

/// A pseudohermitian structure `e^U theta` with `U` a real polynomial (possibly a stack of rescalings).
#[derive(Clone, Debug)]
pub struct PhStructure {
    frame: Frame,
    layers: Vec<Jet>,
    curvature: CurvatureData,
}

impl PhStructure {
    pub fn flat(sig: &Signature) -> Self {
        Self { frame: Frame::new(sig), layers: Vec::new(), curvature: CurvatureData::flat(sig) }
    }

    /// `e^upsilon theta` for the flat contact form `theta`.
    pub fn rescaled(sig: &Signature, upsilon: &Poly) -> Result<Self, StructureError> {
        Self::flat(sig).rescale(upsilon)
    }

    /// Flat connection with prescribed (not necessarily integrable) curvature data.
    pub fn synthetic(sig: &Signature, curvature: CurvatureData) -> Self {
        Self { frame: Frame::new(sig), layers: Vec::new(), curvature }
    }

    /// Synthetic structure with curvature `r` and torsion `a`; `P`, `T` and `S` follow
    /// from their defining formulas.
    pub fn synthetic_from(sig: &Signature, r: Field<Poly>, a: Field<Poly>) -> Self {
        let (p, p_trace) = Self::p_from_r(&r);
        let mut cd = CurvatureData::flat(sig);
        cd.r = r;
        cd.a = a;
        cd.p = p;
        cd.p_trace = p_trace;
        let mut st = Self::synthetic(sig, cd);
        st.curvature.t = st.t_from_definition();
        st.curvature.s = st.s_from_definition();
        st
    }

    /// Rescales this structure by `e^upsilon`, with derivatives of `upsilon` taken here.
    pub fn rescale(&self, upsilon: &Poly) -> Result<Self, StructureError> {
        if upsilon.vars() != self.frame.vars() {
            return Err(StructureError::WrongVars);
        }
        if !upsilon.is_real() {
            return Err(StructureError::NonReal(upsilon.to_string()));
        }
        let jet = Jet::new(self, upsilon);
        let curvature = self.transform_curvature(&jet);
        let mut layers = self.layers.clone();
        layers.push(jet);
        Ok(Self { frame: self.frame.clone(), layers, curvature })
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn sig(&self) -> &Signature {
        self.frame.sig()
    }

    pub fn n(&self) -> usize {
        self.frame.n()
    }

    pub fn is_flat_model(&self) -> bool {
        self.layers.is_empty()
    }

    /// Total rescaling function relative to the flat structure.
    pub fn upsilon(&self) -> Poly {
        let mut acc = Poly::zero(self.frame.vars());
        for l in &self.layers {
            acc.add_assign_ref(&l.upsilon);
        }
        acc
    }

    pub fn curvature(&self) -> &CurvatureData {
        &self.curvature
    }

    /// The structure one rescaling down, if any.
    pub fn base(&self) -> Option<PhStructure> {
        let mut layers = self.layers.clone();
        layers.pop()?;
        let mut st = PhStructure::flat(self.sig());
        for l in layers {
            st = st.rescale(&l.upsilon).expect("already validated");
        }
        Some(st)
    }

    /// Pseudohermitian covariant derivative. Tractor slots are treated as bundles of
    /// weighted Greek components; the tractor connection terms are added elsewhere.
    pub fn nabla_ph<C: Coeff>(&self, f: &Field<C>, dir: Dir) -> Field<C> {
        self.nabla_at(self.layers.len(), f, dir)
    }

    fn nabla_at<C: Coeff>(&self, depth: usize, f: &Field<C>, dir: Dir) -> Field<C> {
        if depth == 0 {
            return self.frame.derive(f, dir);
        }
        let jet = &self.layers[depth - 1];
        let mut r = self.nabla_at(depth - 1, f, dir);
        match dir {
            Dir::Hol => self.correct_hol(jet, f, &mut r, false),
            Dir::Anti => self.correct_hol(jet, f, &mut r, true),
            Dir::Zero => {
                let bh = self.nabla_at(depth - 1, f, Dir::Hol);
                let ba = self.nabla_at(depth - 1, f, Dir::Anti);
                self.correct_zero(jet, f, &bh, &ba, &mut r);
            }
        }
        r.prune();
        r
    }

    /// Corrections for `nabla_c` (or `nabla_cbar` when `bar`), written for the holomorphic
    /// direction and conjugated by swapping the roles of `U_a` and `U_abar`.
    fn correct_hol<C: Coeff>(&self, jet: &Jet, f: &Field<C>, r: &mut Field<C>, bar: bool) {
        let sig = self.sig();
        let n = sig.n();
        let e = |a: usize| sig.eps(a);
        let same = if bar { &jet.anti } else { &jet.hol };
        let (down, up, cdown, cup) =
            if bar { (Slot::Anti, Slot::AntiUp, Slot::Hol, Slot::HolUp) } else { (Slot::Hol, Slot::HolUp, Slot::Anti, Slot::AntiUp) };
        for (k, comp) in f.iter() {
            let (w, gs) = component_shape(f.slots(), k, &f.weight, n);
            let wt = if bar { &w.wp } else { &w.w };
            if !wt.is_zero() {
                let s = ExactScalar::real(wt.clone());
                for cc in 0..n {
                    r.add_mul_at(pushed(k.clone(), cc), &same[cc].scale(&s), comp);
                }
            }
            for g in &gs {
                let b = g.value;
                if g.kind == down {
                    // -U_a f[p=c] - U_c f[p=a]
                    for a in 0..n {
                        r.add_mul_at(pushed(with_value(k, g, a), b), &-&same[a], comp);
                    }
                    for cc in 0..n {
                        r.add_mul_at(pushed(k.clone(), cc), &-&same[cc], comp);
                    }
                } else if g.kind == up {
                    // delta_ac sum_b U_b f[p=b] + U_c f[p=a]
                    for cc in 0..n {
                        r.add_mul_at(pushed(with_value(k, g, cc), cc), &same[b], comp);
                        r.add_mul_at(pushed(k.clone(), cc), &same[cc], comp);
                    }
                } else if g.kind == cdown {
                    // h_{c abar} U^gbar f[p=g]
                    for cc in 0..n {
                        let s = ExactScalar::int(e(cc) * e(b));
                        r.add_mul_at(pushed(with_value(k, g, cc), cc), &same[b].scale(&s), comp);
                    }
                } else if g.kind == cup {
                    // -eps_c eps_a U_a f[p=c]
                    for a in 0..n {
                        let s = ExactScalar::int(-e(b) * e(a));
                        r.add_mul_at(pushed(with_value(k, g, a), b), &same[a].scale(&s), comp);
                    }
                }
            }
        }
    }

    fn correct_zero<C: Coeff>(&self, jet: &Jet, f: &Field<C>, bh: &Field<C>, ba: &Field<C>, r: &mut Field<C>) {
        let sig = self.sig();
        let n = sig.n();
        // frame change: i U^gbar nabla_gbar f - i U^g nabla_g f
        for (k, comp) in ba.iter() {
            let g = *k.last().unwrap() as usize;
            let key = k[..k.len() - 1].to_vec();
            r.add_mul_at(key, &jet.up_bar(sig, g).scale(&ci(1, 1)), comp);
        }
        for (k, comp) in bh.iter() {
            let g = *k.last().unwrap() as usize;
            let key = k[..k.len() - 1].to_vec();
            r.add_mul_at(key, &jet.up(sig, g).scale(&ci(-1, 1)), comp);
        }
        for (k, comp) in f.iter() {
            let (w, gs) = component_shape(f.slots(), k, &f.weight, n);
            let wz = jet.weight_zero_term(&w);
            r.add_mul_at(k.clone(), &wz, comp);
            for g in &gs {
                let b = g.value;
                for a in 0..n {
                    let coef = match g.kind {
                        Slot::Hol => jet.m[a][b].clone(),
                        Slot::HolUp => -&jet.m[b][a],
                        Slot::Anti => jet.mbar[a][b].clone(),
                        Slot::AntiUp => -&jet.mbar[b][a],
                        _ => unreachable!("tractor slots resolve to Greek kinds"),
                    };
                    r.add_mul_at(with_value(k, g, a), &coef, comp);
                }
            }
        }
    }

    /// Curvature of `e^U` (this structure rescaled by the jet's function).
    fn transform_curvature(&self, j: &Jet) -> CurvatureData {
        let sig = self.sig().clone();
        let n = sig.n();
        let base = &self.curvature;
        let v = self.frame.vars().clone();
        let e = |a: usize| ExactScalar::int(sig.eps(a));
        let k2 = |a: usize, b: usize| [a as u8, b as u8];
        let up: Vec<Poly> = (0..n).map(|a| j.up(&sig, a)).collect();
        let upb: Vec<Poly> = (0..n).map(|a| j.up_bar(&sig, a)).collect();

        let a_new = Field::from_fn(&sig, Weight::zero(), vec![Slot::Hol, Slot::Hol], |k| {
            let (a, b) = (k[0] as usize, k[1] as usize);
            let mut x = base.a.comp(k);
            x.add_scaled(&ci(1, 1), &j.hh.comp(k));
            x.add_scaled(&ci(-1, 1), &(&j.hol[a] * &j.hol[b]));
            x
        });
        let p_new = Field::from_fn(&sig, Weight::zero(), vec![Slot::Hol, Slot::Anti], |k| {
            let (a, b) = (k[0] as usize, k[1] as usize);
            let mut x = base.p.comp(k);
            x.add_scaled(&c(-1, 2), &j.ha.comp(&k2(a, b)));
            x.add_scaled(&c(-1, 2), &j.ah.comp(&k2(b, a)));
            if a == b {
                x.add_scaled(&(&c(-1, 2) * &e(a)), &j.sq);
            }
            x
        });
        let mut p_trace = Poly::zero(&v);
        for a in 0..n {
            p_trace.add_scaled(&e(a), &p_new.comp(&k2(a, a)));
        }
        let t_new = Field::from_fn(&sig, Weight::ints(-1, -1), vec![Slot::Hol], |k| {
            let a = k[0] as usize;
            let mut x = base.t.comp(k);
            x.add_scaled(&ci(1, 2), &j.zh.comp(k));
            for b in 0..n {
                x.add_scaled(&e(b), &(&base.p.comp(&k2(a, b)) * &j.hol[b]));
                x.add_scaled(&ci(-1, 1), &(&base.a.comp(&k2(a, b)) * &up[b]));
                x.add_scaled(&c(1, 2), &(&j.hh.comp(&k2(a, b)) * &up[b]));
                x.add_scaled(&(&c(-1, 2) * &e(b)), &(&j.ha.comp(&k2(a, b)) * &j.hol[b]));
            }
            x.add_scaled(&c(-1, 2), &(&j.sq * &j.hol[a]));
            x
        });
        let sum = |f: &dyn Fn(usize) -> Poly| (0..n).fold(Poly::zero(&v), |acc, a| &acc + &f(a));
        let sum2 = |f: &dyn Fn(usize, usize) -> Poly| sum(&|a| (0..n).fold(Poly::zero(&v), |acc, b| &acc + &f(a, b)));
        let tb = base.t.clone();
        let x = sum(&|a| &up[a] * &tb.comp(&[a as u8]));
        let y = sum(&|a| &j.zh.comp(&[a as u8]) * &up[a]);
        let z = sum2(&|a, b| &(&base.a.comp(&k2(a, b)) * &up[a]) * &up[b]);
        let pp = sum2(&|a, b| &(&base.p.comp(&k2(a, b)) * &up[a]) * &upb[b]);
        let w = sum2(&|a, b| &(&j.hh.comp(&k2(a, b)) * &up[a]) * &up[b]);
        let hs = sum2(&|a, b| &(&(&j.ha.comp(&k2(a, b)) + &j.ah.comp(&k2(b, a))) * &up[a]) * &upb[b]);
        let mut s = base.s.clone();
        s.add_scaled(&c(1, 2), &j.zz);
        s.add_scaled(&c(-3, 1), &(&x + &x.conj()));
        s.add_scaled(&ci(1, 1), &(&y.conj() - &y));
        s.add_scaled(&c(-1, 4), &(&j.zero * &j.zero));
        s.add_scaled(&ci(3, 2), &(&z - &z.conj()));
        s.add_scaled(&c(-3, 1), &pp);
        s.add_scaled(&c(-1, 2), &(&w + &w.conj()));
        s.add_scaled(&c(1, 2), &hs);
        s.add_scaled(&c(3, 4), &(&j.sq * &j.sq));
        let r = CurvatureData::r_from_p(&p_new);
        CurvatureData { a: a_new, p: p_new, p_trace, t: t_new, s, r }
    }

    /// `T_a = (1/(n+2)) (nabla_a P - i nabla^b A_ab)`, computed from this structure's connection.
    pub fn t_from_definition(&self) -> Field<Poly> {
        let sig = self.sig();
        let n = self.n();
        let cd = &self.curvature;
        let pf = Field::scalar(sig, Weight::ints(-1, -1), cd.p_trace.clone());
        let dp = self.nabla_ph(&pf, Dir::Hol);
        // nabla_cbar A_ab, key [a, b, c]; contract b with c
        let da = self.nabla_ph(&cd.a, Dir::Anti).contract(1, 2);
        let inv = c(1, n as i64 + 2);
        let mut t = dp.add(&da.scale(&ci(-1, 1)));
        t = t.scale(&inv);
        t
    }

    /// `S = -(1/n) (nabla^a T_a + nabla^abar T_abar + P_ab P^ab - A_ab A^ab)`.
    pub fn s_from_definition(&self) -> Poly {
        let n = self.n();
        let cd = &self.curvature;
        let div_t = self.nabla_ph(&cd.t, Dir::Anti).contract(0, 1).value();
        let pp = cd.p.outer(&cd.p.conj()).contract(0, 2).contract(0, 1).value();
        let aa = cd.a.outer(&cd.a.conj()).contract(0, 2).contract(0, 1).value();
        let mut acc = &div_t + &div_t.conj();
        acc.add_assign_ref(&pp);
        acc.sub_assign_ref(&aa);
        acc.scale(&c(-1, n as i64))
    }

    /// `P = R / (2(n+1))` and `P_ab = (R_ab - R h_ab / (2(n+1))) / (n+2)` from the full curvature.
    pub fn p_from_r(r: &Field<Poly>) -> (Field<Poly>, Poly) {
        let sig = r.sig().clone();
        let n = sig.n() as i64;
        let ric = r.contract(0, 1);
        let scal = ric.contract(0, 1).value();
        let p_trace = scal.scale(&c(1, 2 * (n + 1)));
        let p = Field::from_fn(&sig, Weight::zero(), vec![Slot::Hol, Slot::Anti], |k| {
            let mut x = ric.comp(k);
            if k[0] == k[1] {
                x.add_scaled(&c(-sig.eps(k[0] as usize), 2 * (n + 1)), &scal);
            }
            x.scale(&c(1, n + 2))
        });
        (p, p_trace)
    }
}

impl PhStructure {
    /// The Levi form `h_{a bbar}` as a weight `(1,1)` field.
    pub fn levi_form(&self) -> Field<Poly> {
        let sig = self.sig().clone();
        let v = self.frame.vars().clone();
        Field::from_fn(&sig, Weight::ints(1, 1), vec![Slot::Hol, Slot::Anti], |k| {
            if k[0] == k[1] {
                Poly::constant(&v, ExactScalar::int(sig.eps(k[0] as usize)))
            } else {
                Poly::zero(&v)
            }
        })
    }

    /// Residuals of the three commutation laws for a density `f`; all vanish on a valid structure.
    ///
    /// 1. `[nabla_a, nabla_b] f`
    /// 2. `[nabla_a, nabla_bbar] f - (w-w')/(n+2) R_{a bbar} f + i h_{a bbar} nabla_0 f`
    /// 3. `[nabla_a, nabla_0] f - (w-w')/(n+2) (nabla^c A_{ca}) f - A_{ac} nabla^c f`
    pub fn dencomm_residuals<C: Coeff>(&self, f: &Field<C>) -> [Field<C>; 3] {
        assert!(f.slots().is_empty(), "densities only");
        let n = self.n() as i64;
        let ww = ExactScalar::real(&f.weight.w - &f.weight.wp).scale(&crate::scalars::rat(1, n + 2));
        let da = self.nabla_ph(f, Dir::Hol);
        let db = self.nabla_ph(f, Dir::Anti);
        let d0 = self.nabla_ph(f, Dir::Zero);

        let hh = self.nabla_ph(&da, Dir::Hol);
        let first = hh.sub(&hh.permute(&[1, 0]));

        let ab = self.nabla_ph(&db, Dir::Hol).permute(&[1, 0]);
        let ba = self.nabla_ph(&da, Dir::Anti);
        let ric = self.curvature.ricci();
        let levi = self.levi_form();
        let mut second = ab.sub(&ba);
        second = second.sub(&f.outer(&ric).scale(&ww));
        second = second.add(&d0.outer(&levi).scale(&ci(1, 1)));

        let a0 = self.nabla_ph(&d0, Dir::Hol);
        let oa = self.nabla_ph(&da, Dir::Zero);
        let div_a = self.nabla_ph(&self.curvature.a, Dir::Anti).contract(0, 2);
        let raised = db.dualize(0);
        let mut third = a0.sub(&oa);
        third = third.sub(&f.outer(&div_a).scale(&ww));
        third = third.sub(&raised.outer(&self.curvature.a).contract(0, 2));
        [first, second, third]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::Sampler;
    use crate::scalars::parse_poly;

    fn sig1() -> Signature {
        Signature::definite(1)
    }

    fn ups(sig: &Signature, s: &str) -> Poly {
        parse_poly(s, &crate::scalars::VarSet::heisenberg(sig.n())).unwrap()
    }

    #[test]
    fn non_real_upsilon_rejected() {
        let sig = sig1();
        assert!(matches!(PhStructure::rescaled(&sig, &ups(&sig, "z1")), Err(StructureError::NonReal(_))));
    }

    #[test]
    fn levi_form_is_parallel() {
        for (s, u) in [("+", "z1*zb1 + t^2"), ("+-", "z1*zb2 + zb1*z2 + t - z2*zb2")] {
            let sig = Signature::parse(s).unwrap();
            let st = PhStructure::rescaled(&sig, &ups(&sig, u)).unwrap();
            let h = st.levi_form();
            for d in [Dir::Hol, Dir::Anti, Dir::Zero] {
                assert!(st.nabla_ph(&h, d).is_zero(), "{d:?}");
            }
        }
    }

    #[test]
    fn flat_dencomm() {
        let sig = Signature::parse("+-").unwrap();
        let st = PhStructure::flat(&sig);
        let mut s = Sampler::new(1);
        let f = Field::scalar(&sig, Weight::ints(2, -1), s.poly(st.frame().vars(), 4, 6));
        for r in st.dencomm_residuals(&f) {
            assert!(r.is_zero(), "{r:?}");
        }
    }

    #[test]
    fn rescaled_dencomm() {
        let sig = sig1();
        let st = PhStructure::rescaled(&sig, &ups(&sig, "z1*zb1 + t + z1^2*zb1 + z1*zb1^2")).unwrap();
        let mut s = Sampler::new(2);
        let w = Weight::new(crate::scalars::rat(1, 3), crate::scalars::rat(-2, 3)).unwrap();
        let f = Field::scalar(&sig, w, s.poly(st.frame().vars(), 3, 5));
        for (i, r) in st.dencomm_residuals(&f).iter().enumerate() {
            assert!(r.is_zero(), "law {i}: {r:?}");
        }
    }

    #[test]
    fn torsion_and_s_laws_match_definitions() {
        let sig = sig1();
        let st = PhStructure::rescaled(&sig, &ups(&sig, "z1*zb1 + t^2 + z1^2 + zb1^2")).unwrap();
        assert!(!st.curvature().t.is_zero() && !st.curvature().s.is_zero() && !st.curvature().a.is_zero());
        assert_eq!(st.t_from_definition(), st.curvature().t);
        assert_eq!(st.s_from_definition(), st.curvature().s);
    }

    #[test]
    fn rescalings_compose() {
        let sig = sig1();
        let u1 = ups(&sig, "z1*zb1 + t");
        let u2 = ups(&sig, "t^2 + z1 + zb1");
        let stacked = PhStructure::rescaled(&sig, &u1).unwrap().rescale(&u2).unwrap();
        let direct = PhStructure::rescaled(&sig, &(&u1 + &u2)).unwrap();
        assert_eq!(stacked.curvature(), direct.curvature());
        let mut s = Sampler::new(3);
        let f = s.field(&sig, Weight::ints(1, -2), vec![Slot::Hol, Slot::AntiUp], 2, 3);
        for d in [Dir::Hol, Dir::Anti, Dir::Zero] {
            assert_eq!(stacked.nabla_ph(&f, d), direct.nabla_ph(&f, d), "{d:?}");
        }
    }
}
