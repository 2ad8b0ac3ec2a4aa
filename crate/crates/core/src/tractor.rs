//! The CR tractor bundle: realization as triples `(sigma, tau_a, rho)`, the normal
//! tractor connection, the tractor D-operator and the tractor box.
//!
//! Tractor slot values are `0` (top), `1..=n` (middle, Greek index `value - 1`) and
//! `n + 1` (bottom).

use crate::heisenberg::{Coeff, Dir, Field, Signature, Slot, Weight};
use crate::scalars::{rat, ExactScalar, Poly, Rational};
use crate::structures::{CurvatureData, Jet, PhStructure};

fn ci(p: i64, q: i64) -> ExactScalar {
    ExactScalar::imag(p, q)
}

fn rs(r: &Rational) -> ExactScalar {
    ExactScalar::real(r.clone())
}

/// Dense `(n+2) x (n+2)` matrix of polynomial entries (`None` = 0).
type Mat = Vec<Vec<Option<Poly>>>;

fn mat_zero(d: usize) -> Mat {
    vec![vec![None; d]; d]
}

fn mat_conj(m: &Mat) -> Mat {
    m.iter().map(|r| r.iter().map(|e| e.as_ref().map(Poly::conj)).collect()).collect()
}

fn put(m: &mut Mat, a: usize, b: usize, p: Poly) {
    if !p.is_zero() {
        m[a][b] = Some(match m[a][b].take() {
            Some(q) => &q + &p,
            None => p,
        });
    }
}

/// Applies `m` to tractor slot `pos` of `f`: lower slots transform by `m`, upper slots
/// by `-m^T` when `negate_transpose` (connection terms) or by `inv^T` otherwise.
fn act_slot<C: Coeff>(f: &Field<C>, pos: usize, m: &Mat, upper: bool, out: &mut Field<C>, suffix: Option<u8>) {
    for (k, comp) in f.iter() {
        let b = k[pos] as usize;
        for a in 0..m.len() {
            let coef = if upper { &m[b][a] } else { &m[a][b] };
            if let Some(p) = coef {
                let mut key = k.clone();
                key[pos] = a as u8;
                if let Some(c) = suffix {
                    key.push(c);
                }
                out.add_mul_at(key, p, comp);
            }
        }
    }
}

/// Tractor calculus over a fixed pseudohermitian structure.
#[derive(Clone, Debug)]
pub struct Tractor {
    st: PhStructure,
    /// Connection matrices for a lower tractor index: `hol[c]`, `anti[c]`, `zero`.
    hol: Vec<Mat>,
    anti: Vec<Mat>,
    zero: Mat,
}

impl Tractor {
    pub fn new(st: &PhStructure) -> Self {
        let n = st.n();
        let sig = st.sig().clone();
        let cd = st.curvature();
        let v = st.frame().vars().clone();
        let d = n + 2;
        let (top, bot) = (0, n + 1);
        let e = |a: usize| ExactScalar::int(sig.eps(a));
        let k2 = |a: usize, b: usize| [a as u8, b as u8];
        let one = Poly::one(&v);
        let pn = cd.p_trace.scale(&ExactScalar::imag(1, n as i64 + 2));
        let mut hol = Vec::new();
        let mut anti = Vec::new();
        for c in 0..n {
            let mut m = mat_zero(d);
            put(&mut m, top, c + 1, -&one);
            for a in 0..n {
                put(&mut m, a + 1, top, cd.a.comp(&k2(a, c)).scale(&ci(1, 1)));
                put(&mut m, bot, a + 1, cd.p.comp(&k2(c, a)).scale(&-&e(a)));
            }
            put(&mut m, bot, top, cd.t.comp(&[c as u8]));
            hol.push(m);

            let mut m = mat_zero(d);
            put(&mut m, c + 1, bot, one.scale(&e(c)));
            for a in 0..n {
                put(&mut m, a + 1, top, cd.p.comp(&k2(a, c)));
                put(&mut m, bot, a + 1, cd.a.comp(&k2(c, a)).conj().scale(&(&ci(1, 1) * &e(a))));
            }
            put(&mut m, bot, top, -&cd.t.comp(&[c as u8]).conj());
            anti.push(m);
        }
        let mut zero = mat_zero(d);
        put(&mut zero, top, top, pn.clone());
        put(&mut zero, top, bot, one.scale(&ci(-1, 1)));
        for a in 0..n {
            for b in 0..n {
                put(&mut zero, a + 1, b + 1, cd.p.comp(&k2(a, b)).scale(&(&ci(-1, 1) * &e(b))));
            }
            put(&mut zero, a + 1, a + 1, pn.clone());
            put(&mut zero, a + 1, top, cd.t.comp(&[a as u8]).scale(&ci(2, 1)));
            put(&mut zero, bot, a + 1, cd.t.comp(&[a as u8]).conj().scale(&(&ci(2, 1) * &e(a))));
        }
        put(&mut zero, bot, bot, pn);
        put(&mut zero, bot, top, cd.s.scale(&ci(1, 1)));
        Self { st: st.clone(), hol, anti, zero }
    }

    pub fn structure(&self) -> &PhStructure {
        &self.st
    }

    pub fn sig(&self) -> &Signature {
        self.st.sig()
    }

    pub fn n(&self) -> usize {
        self.st.n()
    }

    fn matrix(&self, dir: Dir, c: usize) -> &Mat {
        match dir {
            Dir::Hol => &self.hol[c],
            Dir::Anti => &self.anti[c],
            Dir::Zero => &self.zero,
        }
    }

    /// Covariant derivative coupling the pseudohermitian and tractor connections.
    pub fn nabla<C: Coeff>(&self, f: &Field<C>, dir: Dir) -> Field<C> {
        let mut r = self.st.nabla_ph(f, dir);
        let tractor_slots: Vec<(usize, Slot)> =
            f.slots().iter().enumerate().filter(|(_, s)| s.is_tractor()).map(|(i, s)| (i, *s)).collect();
        if tractor_slots.is_empty() {
            return r;
        }
        let dirs: Vec<Option<u8>> = match dir {
            Dir::Zero => vec![None],
            _ => (0..self.n()).map(|c| Some(c as u8)).collect(),
        };
        for (pos, s) in tractor_slots {
            for &c in &dirs {
                let ci_ = c.map_or(0, |x| x as usize);
                let (m, upper) = match s {
                    Slot::Trac => (self.matrix(dir, ci_).clone(), false),
                    Slot::TracUp => (neg(self.matrix(dir, ci_)), true),
                    Slot::TracBar => (mat_conj(self.matrix(dir.conj(), ci_)), false),
                    Slot::TracBarUp => (neg(&mat_conj(self.matrix(dir.conj(), ci_))), true),
                    _ => unreachable!(),
                };
                act_slot(f, pos, &m, upper, &mut r, c);
            }
        }
        r.prune();
        r
    }

    /// The tractor metric `h_{A Bbar}`.
    pub fn metric(&self) -> Field<Poly> {
        let n = self.n();
        let sig = self.sig().clone();
        let v = self.st.frame().vars().clone();
        Field::from_fn(&sig, Weight::zero(), vec![Slot::Trac, Slot::TracBar], |k| {
            let (a, b) = (k[0] as usize, k[1] as usize);
            let val = if (a == 0 && b == n + 1) || (a == n + 1 && b == 0) {
                1
            } else if a == b && (1..=n).contains(&a) {
                sig.eps(a - 1)
            } else {
                0
            };
            Poly::constant(&v, ExactScalar::int(val))
        })
    }

    /// The canonical tractor `Z_A in E_A(0,1)`.
    pub fn z_lower(&self) -> Field<Poly> {
        let n = self.n();
        let mut z = Field::zero(self.sig(), Weight::ints(0, 1), vec![Slot::Trac]);
        z.set(vec![(n + 1) as u8], Poly::one(self.st.frame().vars()));
        z
    }

    /// `Z^A = h^{A Bbar} Z_Bbar in E^A(1,0)`.
    pub fn z_upper(&self) -> Field<Poly> {
        self.z_lower().conj().dualize(0)
    }

    fn weight_consts(&self, w: &Weight) -> (Rational, Rational) {
        let n = self.n() as i64;
        (w.total(self.n()), (&w.wp - &w.w) * rat(1, n + 2))
    }

    /// `box f = nabla^a nabla_a f + i w nabla_0 f + w (1 + (w'-w)/(n+2)) P f`.
    pub fn boxop<C: Coeff>(&self, f: &Field<C>) -> Field<C> {
        let m = f.slots().len();
        let w = &f.weight;
        let (_, q) = self.weight_consts(w);
        let lap = self.nabla(&self.nabla(f, Dir::Hol), Dir::Anti).contract(m, m + 1);
        let mut r = lap.add(&self.nabla(f, Dir::Zero).scale(&rs(&w.w).mul_i()));
        let pc = rs(&(&w.w * &(Rational::from_integer(1.into()) + q)));
        let pf = f.mul_scalar(&self.st.curvature().p_trace, &Weight::ints(-1, -1)).scale(&pc);
        r = r.add(&pf);
        r
    }

    /// `boxbar f = nabla_a nabla^a f - i w' nabla_0 f + w' (1 - (w'-w)/(n+2)) P f`.
    pub fn boxbar<C: Coeff>(&self, f: &Field<C>) -> Field<C> {
        let m = f.slots().len();
        let w = &f.weight;
        let (_, q) = self.weight_consts(w);
        let lap = self.nabla(&self.nabla(f, Dir::Anti), Dir::Hol).contract(m + 1, m);
        let mut r = lap.add(&self.nabla(f, Dir::Zero).scale(&rs(&w.wp).mul_i().scale(&rat(-1, 1))));
        let pc = rs(&(&w.wp * &(Rational::from_integer(1.into()) - q)));
        let pf = f.mul_scalar(&self.st.curvature().p_trace, &Weight::ints(-1, -1)).scale(&pc);
        r = r.add(&pf);
        r
    }

    /// `D_A f = (w(n+w+w') f, (n+w+w') nabla_a f, -box f)`, new slot first.
    pub fn d<C: Coeff>(&self, f: &Field<C>) -> Field<C> {
        let (tot, _) = self.weight_consts(&f.weight);
        let top = f.scale(&rs(&(&f.weight.w * &tot)));
        let mid = self.nabla(f, Dir::Hol).scale(&rs(&tot));
        let bot = self.boxop(f).scale_int(-1);
        self.assemble(f, Slot::Trac, f.weight.shift(-1, 0), &top, &mid, &bot)
    }

    /// `D_Abar f = (w'(n+w+w') f, (n+w+w') nabla_abar f, -boxbar f)`, new slot first.
    pub fn d_bar<C: Coeff>(&self, f: &Field<C>) -> Field<C> {
        let (tot, _) = self.weight_consts(&f.weight);
        let top = f.scale(&rs(&(&f.weight.wp * &tot)));
        let mid = self.nabla(f, Dir::Anti).scale(&rs(&tot));
        let bot = self.boxbar(f).scale_int(-1);
        self.assemble(f, Slot::TracBar, f.weight.shift(0, -1), &top, &mid, &bot)
    }

    /// `D^A f = h^{A Bbar} D_Bbar f`, new slot first.
    pub fn d_up<C: Coeff>(&self, f: &Field<C>) -> Field<C> {
        self.d_bar(f).dualize(0)
    }

    /// `D^Abar f = h^{B Abar} D_B f`, new slot first.
    pub fn d_bar_up<C: Coeff>(&self, f: &Field<C>) -> Field<C> {
        self.d(f).dualize(0)
    }

    /// `Dtilde_A f = (w f, nabla_a f, 0)`, new slot first.
    pub fn d_tilde<C: Coeff>(&self, f: &Field<C>) -> Field<C> {
        let top = f.scale(&rs(&f.weight.w));
        let mid = self.nabla(f, Dir::Hol);
        let bot = f.with_shape(f.weight.shift(-1, -1), f.slots().to_vec());
        self.assemble(f, Slot::Trac, f.weight.shift(-1, 0), &top, &mid, &bot)
    }

    fn assemble<C: Coeff>(&self, f: &Field<C>, kind: Slot, weight: Weight, top: &Field<C>, mid: &Field<C>, bot: &Field<C>) -> Field<C> {
        let n = self.n();
        let mut slots = vec![kind];
        slots.extend_from_slice(f.slots());
        let mut r = f.with_shape(weight, slots);
        for (k, c) in top.iter() {
            let mut key = vec![0u8];
            key.extend_from_slice(k);
            r.set(key, c.clone());
        }
        for (k, c) in mid.iter() {
            let (rest, a) = k.split_at(k.len() - 1);
            let mut key = vec![a[0] + 1];
            key.extend_from_slice(rest);
            r.set(key, c.clone());
        }
        for (k, c) in bot.iter() {
            let mut key = vec![(n + 1) as u8];
            key.extend_from_slice(k);
            r.set(key, c.clone());
        }
        r
    }

    /// Multiplies by `Z_Abar` (new slot first).
    pub fn times_zbar<C: Coeff>(&self, f: &Field<C>) -> Field<C> {
        let z = self.z_lower().conj();
        let m = f.slots().len();
        let mut perm = vec![m];
        perm.extend(0..m);
        f.outer(&z).permute(&perm)
    }

    /// Multiplies by `Z_A` (new slot first).
    pub fn times_z<C: Coeff>(&self, f: &Field<C>) -> Field<C> {
        let z = self.z_lower();
        let m = f.slots().len();
        let mut perm = vec![m];
        perm.extend(0..m);
        f.outer(&z).permute(&perm)
    }
}

fn neg(m: &Mat) -> Mat {
    m.iter().map(|r| r.iter().map(|e| e.as_ref().map(|p| -p)).collect()).collect()
}

/// Change of realization `M_U` between `theta` and `e^U theta`.
#[derive(Clone, Debug)]
pub struct Transport {
    fwd: Mat,
    inv: Mat,
}

impl Transport {
    /// Transport from the realization of `base` to that of `base` rescaled by `upsilon`.
    pub fn new(base: &PhStructure, upsilon: &Poly) -> Self {
        let jet = Jet::new(base, upsilon);
        let sig = base.sig();
        let n = sig.n();
        let v = base.frame().vars().clone();
        let mut fwd = mat_zero(n + 2);
        let mut inv = mat_zero(n + 2);
        for a in 0..n + 2 {
            put(&mut fwd, a, a, Poly::one(&v));
            put(&mut inv, a, a, Poly::one(&v));
        }
        let half = ExactScalar::frac(-1, 2);
        let i0 = jet.zero.scale(&ci(1, 1));
        for a in 0..n {
            put(&mut fwd, a + 1, 0, jet.hol[a].clone());
            put(&mut inv, a + 1, 0, -&jet.hol[a]);
            put(&mut fwd, n + 1, a + 1, -&jet.up(sig, a));
            put(&mut inv, n + 1, a + 1, jet.up(sig, a));
        }
        put(&mut fwd, n + 1, 0, (&jet.sq + &i0).scale(&half));
        put(&mut inv, n + 1, 0, (&jet.sq - &i0).scale(&half));
        Self { fwd, inv }
    }

    fn apply<C: Coeff>(&self, f: &Field<C>, forward: bool) -> Field<C> {
        let (m, minv) = if forward { (&self.fwd, &self.inv) } else { (&self.inv, &self.fwd) };
        let mut cur = f.clone();
        for (pos, s) in f.slots().iter().enumerate() {
            if !s.is_tractor() {
                continue;
            }
            let (mm, upper) = match s {
                Slot::Trac => (m.clone(), false),
                Slot::TracUp => (minv.clone(), true),
                Slot::TracBar => (mat_conj(m), false),
                Slot::TracBarUp => (mat_conj(minv), true),
                _ => unreachable!(),
            };
            let mut next = cur.zero_like();
            act_slot(&cur, pos, &mm, upper, &mut next, None);
            next.prune();
            cur = next;
        }
        cur
    }

    /// Base realization to rescaled realization.
    pub fn forward<C: Coeff>(&self, f: &Field<C>) -> Field<C> {
        self.apply(f, true)
    }

    /// Rescaled realization back to the base realization.
    pub fn backward<C: Coeff>(&self, f: &Field<C>) -> Field<C> {
        self.apply(f, false)
    }
}

/// Components of the tractor curvature.
#[derive(Clone, Debug, PartialEq)]
pub struct TractorCurvature {
    /// `S_{a bbar c dbar}`, slots `[Hol, Anti, Hol, Anti]`, weight `(1,1)`.
    pub s: Field<Poly>,
    /// `V_{a bbar c}`, slots `[Hol, Anti, Hol]`.
    pub v: Field<Poly>,
    /// `U_{a bbar}`, weight `(-1,-1)`.
    pub u: Field<Poly>,
    /// `Q_{ab}`, weight `(-1,-1)`.
    pub q: Field<Poly>,
    /// `Y_a`, weight `(-2,-2)`.
    pub y: Field<Poly>,
}

impl TractorCurvature {
    pub fn is_zero(&self) -> bool {
        self.s.is_zero() && self.v.is_zero() && self.u.is_zero() && self.q.is_zero() && self.y.is_zero()
    }
}

impl Tractor {
    /// Computes `S, V, U, Q, Y` from the pseudohermitian curvature data.
    pub fn curvature(&self) -> TractorCurvature {
        let st = &self.st;
        let cd = st.curvature();
        let sig = self.sig().clone();
        let n = self.n();
        let levi = st.levi_form();
        let e = |g: usize| ExactScalar::int(sig.eps(g));
        let i1 = ci(1, 1);
        let tf = |t: &Field<Poly>| t.reweight(Weight::ints(-1, -1));
        let t = tf(&cd.t);
        let tbar = t.conj();

        let s = cd.r.sub(&CurvatureData::r_from_p(&cd.p));

        // nabla_bbar A_{ac}: key [a, c, b] -> [a, b, c]
        let da = st.nabla_ph(&cd.a, Dir::Anti).permute(&[0, 2, 1]);
        let dp = st.nabla_ph(&cd.p, Dir::Hol);
        let mut v = da.add(&dp.scale(&i1));
        v = v.sub(&levi.outer(&t).scale(&i1));
        v = v.sub(&t.outer(&levi).permute(&[0, 2, 1]).scale(&ci(2, 1)));

        let vars = st.frame().vars().clone();
        let sum_g = |f: &dyn Fn(usize) -> Poly| (0..n).fold(Poly::zero(&vars), |acc, g| &acc + &f(g));
        let k2 = |a: usize, b: usize| [a as u8, b as u8];

        // nabla_a T_bbar: key [b, a] -> [a, b]
        let dtb = st.nabla_ph(&tbar, Dir::Hol).permute(&[1, 0]);
        let dt = st.nabla_ph(&t, Dir::Anti);
        let mut u = dtb.add(&dt);
        let quad = Field::from_fn(&sig, Weight::ints(-1, -1), vec![Slot::Hol, Slot::Anti], |k| {
            let (a, b) = (k[0] as usize, k[1] as usize);
            sum_g(&|g| {
                let pp = &cd.p.comp(&k2(a, g)) * &cd.p.comp(&k2(g, b));
                let aa = &cd.a.comp(&k2(a, g)) * &cd.a.comp(&k2(g, b)).conj();
                (&pp - &aa).scale(&e(g))
            })
        });
        u = u.add(&quad).add(&levi.mul_scalar(&cd.s, &Weight::ints(-2, -2)));

        let mut q = st.nabla_ph(&cd.a, Dir::Zero).scale(&i1);
        q = q.sub(&st.nabla_ph(&t, Dir::Hol).scale(&ci(2, 1)));
        let pa = Field::from_fn(&sig, Weight::ints(-1, -1), vec![Slot::Hol, Slot::Hol], |k| {
            let (a, b) = (k[0] as usize, k[1] as usize);
            sum_g(&|g| (&cd.p.comp(&k2(a, g)) * &cd.a.comp(&k2(g, b))).scale(&e(g)))
        });
        q = q.add(&pa.scale_int(2));

        let sf = Field::scalar(&sig, Weight::ints(-2, -2), cd.s.clone());
        let mut y = st.nabla_ph(&t, Dir::Zero).sub(&st.nabla_ph(&sf, Dir::Hol).scale(&i1));
        let quad = Field::from_fn(&sig, Weight::ints(-2, -2), vec![Slot::Hol], |k| {
            let a = k[0] as usize;
            sum_g(&|g| {
                let pt = (&cd.p.comp(&k2(a, g)) * &t.comp(&[g as u8])).scale(&ci(2, 1));
                let at = (&cd.a.comp(&k2(a, g)) * &t.comp(&[g as u8]).conj()).scale(&ExactScalar::int(-3));
                (&pt + &at).scale(&e(g))
            })
        });
        y = y.add(&quad);
        TractorCurvature { s, v, u, q, y }
    }

    /// `Omega_{r sbar A}^B`, slots `[Hol, Anti, Trac, TracUp]`.
    pub fn omega_hol_anti(&self, tc: &TractorCurvature) -> Field<Poly> {
        let n = self.n();
        let sig = self.sig().clone();
        let e = |g: usize| ExactScalar::int(sig.eps(g));
        let bot = (n + 1) as u8;
        Field::from_fn(&sig, Weight::ints(0, 0), vec![Slot::Hol, Slot::Anti, Slot::Trac, Slot::TracUp], |k| {
            let (r, s, ra, cb) = (k[0], k[1], k[2], k[3]);
            let zero = Poly::zero(self.st.frame().vars());
            match (ra, cb) {
                (a, 0) if (1..bot).contains(&a) => tc.v.comp(&[r, s, a - 1]).scale(&ci(1, 1)),
                (a, b) if (1..bot).contains(&a) && (1..bot).contains(&b) => tc.s.comp(&[r, s, a - 1, b - 1]).scale(&e(b as usize - 1)),
                (x, 0) if x == bot => tc.u.comp(&[r, s]),
                (x, b) if x == bot && (1..bot).contains(&b) => tc.v.comp(&[s, r, b - 1]).conj().scale(&(&ci(-1, 1) * &e(b as usize - 1))),
                _ => zero,
            }
        })
    }

    /// `Omega_{r 0 A}^B`, slots `[Hol, Trac, TracUp]`.
    pub fn omega_hol_zero(&self, tc: &TractorCurvature) -> Field<Poly> {
        let n = self.n();
        let sig = self.sig().clone();
        let e = |g: usize| ExactScalar::int(sig.eps(g));
        let bot = (n + 1) as u8;
        Field::from_fn(&sig, Weight::ints(-1, -1), vec![Slot::Hol, Slot::Trac, Slot::TracUp], |k| {
            let (r, ra, cb) = (k[0], k[1], k[2]);
            let zero = Poly::zero(self.st.frame().vars());
            match (ra, cb) {
                (a, 0) if (1..bot).contains(&a) => tc.q.comp(&[a - 1, r]),
                // V_r^b_a = h^{b cbar} V_{r cbar a}
                (a, b) if (1..bot).contains(&a) && (1..bot).contains(&b) => tc.v.comp(&[r, b - 1, a - 1]).scale(&e(b as usize - 1)),
                (x, 0) if x == bot => tc.y.comp(&[r]),
                (x, b) if x == bot && (1..bot).contains(&b) => tc.u.comp(&[r, b - 1]).scale(&(&ci(-1, 1) * &e(b as usize - 1))),
                _ => zero,
            }
        })
    }

    /// `Omega_{rbar 0 A}^B`, slots `[Anti, Trac, TracUp]`.
    pub fn omega_anti_zero(&self, tc: &TractorCurvature) -> Field<Poly> {
        let n = self.n();
        let sig = self.sig().clone();
        let e = |g: usize| ExactScalar::int(sig.eps(g));
        let bot = (n + 1) as u8;
        Field::from_fn(&sig, Weight::ints(-1, -1), vec![Slot::Anti, Slot::Trac, Slot::TracUp], |k| {
            let (r, ra, cb) = (k[0], k[1], k[2]);
            let zero = Poly::zero(self.st.frame().vars());
            match (ra, cb) {
                (a, 0) if (1..bot).contains(&a) => tc.u.comp(&[a - 1, r]).scale(&ci(-1, 1)),
                // V^b_{a rbar} = h^{b cbar} V_{cbar a rbar} = eps_b conj(V_{b abar r})
                (a, b) if (1..bot).contains(&a) && (1..bot).contains(&b) => {
                    tc.v.comp(&[b - 1, a - 1, r]).conj().scale(&-&e(b as usize - 1))
                }
                (x, 0) if x == bot => -&tc.y.comp(&[r]).conj(),
                // Q_rbar^b = h^{b cbar} Q_{rbar cbar}
                (x, b) if x == bot && (1..bot).contains(&b) => tc.q.comp(&[r, b - 1]).conj().scale(&-&e(b as usize - 1)),
                _ => zero,
            }
        })
    }

    /// Residuals of the commutators of the coupled connection on a weight-`(0,0)` lower
    /// tractor `v`, after removing torsion terms; each equals `Omega . v`.
    ///
    /// 1. `[nabla_a, nabla_b] v`
    /// 2. `[nabla_a, nabla_bbar] v + i h_{a bbar} nabla_0 v`
    /// 3. `[nabla_a, nabla_0] v - A_{ac} nabla^c v`
    pub fn commutator_residuals<C: Coeff>(&self, v: &Field<C>) -> [Field<C>; 3] {
        assert_eq!(v.slots(), &[Slot::Trac], "single lower tractor slot");
        let cd = self.st.curvature();
        let da = self.nabla(v, Dir::Hol);
        let db = self.nabla(v, Dir::Anti);
        let d0 = self.nabla(v, Dir::Zero);
        let hh = self.nabla(&da, Dir::Hol);
        let first = hh.sub(&hh.permute(&[0, 2, 1]));
        let ab = self.nabla(&db, Dir::Hol).permute(&[0, 2, 1]);
        let ba = self.nabla(&da, Dir::Anti);
        let second = ab.sub(&ba).add(&d0.outer(&self.st.levi_form()).scale(&ci(1, 1)));
        let a0 = self.nabla(&d0, Dir::Hol);
        let oa = self.nabla(&da, Dir::Zero);
        let raised = db.dualize(1);
        let third = a0.sub(&oa).sub(&raised.outer(&cd.a).contract(1, 3));
        [first, second, third]
    }
}

impl Tractor {
    fn box_pow<C: Coeff>(&self, f: &Field<C>, k: u32) -> Field<C> {
        (0..k).fold(f.clone(), |g, _| self.boxop(&g))
    }

    /// Residuals of the commutation identities of the D-operators (zero on CR flat
    /// structures), labelled `DD`, `DDbar`, `DbarDbar`.
    pub fn d_commutators<C: Coeff>(&self, f: &Field<C>) -> Vec<(&'static str, Field<C>)> {
        let m = f.slots().len();
        let swap: Vec<usize> = [1, 0].into_iter().chain(2..m + 2).collect();
        let dd = self.d(&self.d(f));
        let bb = self.d_bar(&self.d_bar(f));
        let db = self.d(&self.d_bar(f)).sub(&self.d_bar(&self.d(f)).permute(&swap));
        vec![("DD", dd.sub(&dd.permute(&swap))), ("DDbar", db), ("DbarDbar", bb.sub(&bb.permute(&swap)))]
    }

    /// `[box^k, Z_A] f - k box^{k-1} Dtilde_A f`.
    pub fn box_power_z_residual<C: Coeff>(&self, f: &Field<C>, k: u32) -> Field<C> {
        let lhs = self.box_pow(&self.times_z(f), k).sub(&self.times_z(&self.box_pow(f, k)));
        let rhs = self.box_pow(&self.d_tilde(f), k - 1).scale_int(k as i64);
        lhs.sub(&rhs)
    }

    /// `[box, Dtilde_A] f`.
    pub fn box_dtilde_residual<C: Coeff>(&self, f: &Field<C>) -> Field<C> {
        self.boxop(&self.d_tilde(f)).sub(&self.d_tilde(&self.boxop(f)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::Sampler;
    use crate::scalars::{parse_poly, VarSet};

    fn ups(sig: &Signature, s: &str) -> Poly {
        parse_poly(s, &VarSet::heisenberg(sig.n())).unwrap()
    }

    fn rescaled(s: &str, u: &str) -> Tractor {
        let sig = Signature::parse(s).unwrap();
        Tractor::new(&PhStructure::rescaled(&sig, &ups(&sig, u)).unwrap())
    }

    fn flat(n: usize) -> Tractor {
        Tractor::new(&PhStructure::flat(&Signature::definite(n)))
    }

    #[test]
    fn antiholomorphic_derivative_of_z() {
        let tr = flat(2);
        let dz = tr.nabla(&tr.z_lower(), Dir::Anti);
        let v = VarSet::heisenberg(2);
        let mut want = Field::zero(tr.sig(), Weight::ints(0, 1), vec![Slot::Trac, Slot::Anti]);
        for a in 0..2u8 {
            want.set(vec![a + 1, a], Poly::one(&v));
        }
        assert_eq!(dz, want);
        assert!(tr.nabla(&tr.z_lower(), Dir::Hol).is_zero());
        let mut top = Field::zero(tr.sig(), Weight::ints(-1, 0), vec![Slot::Trac]);
        top.set(vec![0], Poly::constant(&v, ci(-1, 1)));
        assert_eq!(tr.nabla(&tr.z_lower(), Dir::Zero), top);
    }

    #[test]
    fn constant_top_slot_is_parallel_when_flat() {
        let tr = flat(1);
        let mut f = Field::zero(tr.sig(), Weight::ints(-1, 0), vec![Slot::Trac]);
        f.set(vec![0], Poly::one(&VarSet::heisenberg(1)));
        for d in [Dir::Hol, Dir::Anti, Dir::Zero] {
            assert!(tr.nabla(&f, d).is_zero());
        }
    }

    #[test]
    fn tractor_metric_is_parallel() {
        for tr in [rescaled("+", "z1*zb1 + t^2 + z1^2 + zb1^2"), rescaled("+-", "z1*zb2 + z2*zb1 + t")] {
            let h = tr.metric();
            for d in [Dir::Hol, Dir::Anti, Dir::Zero] {
                assert!(tr.nabla(&h, d).is_zero(), "{d:?}");
            }
        }
    }

    #[test]
    fn connection_is_flat_on_cr_flat_structures() {
        let mut s = Sampler::new(11);
        for tr in [rescaled("+", "z1*zb1 + t^2 + z1^2*zb1 + z1*zb1^2"), rescaled("+-", "z1*zb1 - z2*zb2 + t*z1 + t*zb1")] {
            let v = s.field(tr.sig(), Weight::zero(), vec![Slot::Trac], 2, 3);
            for (i, r) in tr.commutator_residuals(&v).iter().enumerate() {
                assert!(r.is_zero(), "law {i}: {r:?}");
            }
            let tc = tr.curvature();
            assert!(tc.is_zero(), "{tc:?}");
            assert!(tr.omega_hol_anti(&tc).is_zero());
        }
    }

    #[test]
    fn synthetic_curvature_symmetries() {
        let sig = Signature::parse("+-").unwrap();
        let mut s = Sampler::new(5);
        let r = s.curvature_tensor(&sig, 1, 2);
        let a = s.symmetric_torsion(&sig, 1, 2);
        let tr = Tractor::new(&PhStructure::synthetic_from(&sig, r, a));
        let tc = tr.curvature();
        assert!(!tc.s.is_zero() && !tc.v.is_zero() && !tc.u.is_zero());
        assert!(tc.s.contract(0, 1).is_zero());
        assert_eq!(tc.s, tc.s.permute(&[2, 1, 0, 3]));
        assert!(tc.v.contract(0, 1).is_zero());
        assert!(tc.u.contract(0, 1).is_zero());
        let oh = tr.omega_hol_anti(&tc);
        assert!(oh.contract(0, 1).is_zero());
    }

    fn scalar(tr: &Tractor, w: Weight, seed: u64) -> Field<Poly> {
        Sampler::new(seed).field(tr.sig(), w, vec![], 3, 4)
    }

    #[test]
    fn dz_coefficient() {
        let tr = flat(1);
        for (w, c) in [((-1, -1), 1), ((0, 0), 6), ((1, -2), 6)] {
            let f = scalar(&tr, Weight::ints(w.0, w.1), 1);
            let zf = f.outer(&tr.z_upper());
            let lhs = tr.d(&zf).contract(0, 1);
            assert_eq!(lhs, f.scale_int(c), "{w:?}");
        }
    }

    #[test]
    fn d_squared_vanishes_and_expansions_hold() {
        let tr = rescaled("+", "z1*zb1 + t");
        let n = 1;
        for (w, wp) in [(1, 0), (0, -2), (2, 1)] {
            let wt = Weight::ints(w, wp);
            let f = scalar(&tr, wt.clone(), 3);
            let dd = tr.d(&tr.d_up(&f)).contract(0, 1);
            assert!(dd.is_zero());
            let tot = n + w + wp;
            let rhs = tr.d_tilde(&f).scale_int(tot).sub(&tr.times_z(&tr.boxop(&f)));
            assert_eq!(tr.d(&f), rhs);
            let diff = tr.boxop(&f).sub(&tr.boxbar(&f));
            let p = f.mul_scalar(&tr.structure().curvature().p_trace, &Weight::ints(-1, -1));
            let want = tr.nabla(&f, Dir::Zero).scale(&ci(1, 1)).add(&p.scale(&ExactScalar::frac(wp - w, n + 2))).scale_int(tot);
            assert_eq!(diff, want);
        }
    }

    #[test]
    fn transport_fixes_z_and_metric() {
        let sig = Signature::definite(2);
        let base = PhStructure::rescaled(&sig, &ups(&sig, "t")).unwrap();
        let u = ups(&sig, "z1*zb1 + z2*zb2^2 + z2^2*zb2 + t^2");
        let m = Transport::new(&base, &u);
        let tr = Tractor::new(&base);
        assert_eq!(m.forward(&tr.z_lower()), tr.z_lower());
        assert_eq!(m.forward(&tr.z_upper()), tr.z_upper());
        assert_eq!(m.forward(&tr.metric()), tr.metric());
        let mut s = Sampler::new(8);
        let v = s.field(&sig, Weight::ints(1, 2), vec![Slot::Trac, Slot::TracBarUp], 2, 2);
        assert_eq!(m.backward(&m.forward(&v)), v);
    }

    #[test]
    fn d_operator_is_invariant() {
        let sig = Signature::parse("+-").unwrap();
        let base = PhStructure::rescaled(&sig, &ups(&sig, "z1*zb2 + z2*zb1")).unwrap();
        let u = ups(&sig, "t + z1*zb1 - z2^2*zb2 - z2*zb2^2");
        let hat = base.rescale(&u).unwrap();
        let m = Transport::new(&base, &u);
        let (tb, th) = (Tractor::new(&base), Tractor::new(&hat));
        let mut s = Sampler::new(4);
        let f = s.field(&sig, Weight::ints(1, -1), vec![], 3, 3);
        assert_eq!(th.d(&f), m.forward(&tb.d(&f)));
        assert_eq!(th.d_bar(&f), m.forward(&tb.d_bar(&f)));
        let g = s.field(&sig, Weight::ints(0, 1), vec![Slot::TracBar], 2, 2);
        assert_eq!(m.backward(&th.d(&m.forward(&g))), tb.d(&g));
    }

    #[test]
    fn connection_is_invariant_on_horizontal_directions() {
        let sig = Signature::definite(1);
        let base = PhStructure::flat(&sig);
        let u = ups(&sig, "z1*zb1 + t^2 + z1");
        let u = &u + &u.conj();
        let hat = base.rescale(&u).unwrap();
        let m = Transport::new(&base, &u);
        let (tb, th) = (Tractor::new(&base), Tractor::new(&hat));
        let v = Sampler::new(6).field(&sig, Weight::ints(0, 0), vec![Slot::Trac], 3, 3);
        for d in [Dir::Hol, Dir::Anti] {
            assert_eq!(th.nabla(&m.forward(&v), d), m.forward(&tb.nabla(&v, d)), "{d:?}");
        }
    }

    #[test]
    fn raising_commutes_with_nabla() {
        let tr = rescaled("+", "z1*zb1 + t^2");
        let v = Sampler::new(9).field(tr.sig(), Weight::ints(1, 0), vec![Slot::Trac, Slot::Hol], 2, 2);
        for d in [Dir::Hol, Dir::Anti, Dir::Zero] {
            assert_eq!(tr.nabla(&v.dualize(0), d), tr.nabla(&v, d).dualize(0), "{d:?}");
        }
    }

    #[test]
    fn flat_commutation_identities() {
        let tr = flat(1);
        let f = Sampler::new(21).field(tr.sig(), Weight::ints(2, -1), vec![], 4, 4);
        for (name, r) in tr.d_commutators(&f) {
            assert!(r.is_zero(), "{name}");
        }
        let g = Sampler::new(22).field(tr.sig(), Weight::ints(1, 0), vec![Slot::TracBar], 3, 2);
        for (name, r) in tr.d_commutators(&g) {
            assert!(r.is_zero(), "{name} on tractor");
        }
        assert!(tr.box_dtilde_residual(&f).is_zero());
        for k in 1..=3 {
            assert!(tr.box_power_z_residual(&f, k).is_zero(), "k = {k}");
        }
    }

    #[test]
    fn box_z_on_constant() {
        let tr = flat(1);
        let v = VarSet::heisenberg(1);
        let f = Field::scalar(tr.sig(), Weight::ints(3, 1), Poly::constant(&v, ExactScalar::int(2)));
        let lhs = tr.boxop(&tr.times_z(&f)).sub(&tr.times_z(&tr.boxop(&f)));
        let mut want = Field::zero(tr.sig(), Weight::ints(2, 1), vec![Slot::Trac]);
        want.set(vec![0], Poly::constant(&v, ExactScalar::int(6)));
        assert_eq!(lhs, want);
    }

    #[test]
    fn boxes_agree_at_critical_weight() {
        let tr = rescaled("+-", "z1*zb1 + t");
        let f = scalar(&tr, Weight::ints(-1, -1), 2);
        assert_eq!(tr.boxop(&f), tr.boxbar(&f));
    }
}
