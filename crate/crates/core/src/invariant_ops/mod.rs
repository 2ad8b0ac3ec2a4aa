//! Invariant powers of the sub-Laplacian built from iterated tractor D-operators.
//!
//! Operators are extracted symbolically: the tractor calculus is run on fields whose
//! coefficients are themselves differential operators, starting from the identity.

mod diffop;
mod factor;

use thiserror::Error;

pub use diffop::{hermitian_dual, DiffOp, DiffOpRecord, OpRecord, Operator};
pub use factor::{
    delta_b, folland_stein_factorize, folland_stein_product, graded_basis, nonisotropic_weights, operator_matrix, t_op, OperatorMatrix,
};

use crate::heisenberg::{Dir, Field, Slot, Weight};
use crate::scalars::{rat, ExactScalar, Poly, Rational};
use crate::structures::PhStructure;
use crate::tractor::Tractor;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InvariantError {
    #[error("weight {0} is not resonant: n+w+w'+1 must be a positive integer")]
    NotResonant(String),
    #[error("normalization vanishes: factor {0} = 0")]
    ForbiddenWeight(String),
    #[error("pattern: {0}")]
    BadPattern(String),
    #[error("weight mismatch: {0} vs {1}")]
    WeightMismatch(String, String),
    #[error("upper slots of box D_A f do not vanish: {0}")]
    NonvanishingSlots(String),
    #[error("only defined for n = 1, got n = {0}")]
    DimensionOnly(usize),
    #[error("format: {0}")]
    Format(String),
}

/// Choice of barred indices and orderings of the `k-1` D-factors on each side of the box.
///
/// `right_order` lists indices in the order their `D` is applied to `f`; `left_order`
/// lists them in the order their raised `D` is applied after the box.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexPattern {
    bars: Vec<bool>,
    left_order: Vec<usize>,
    right_order: Vec<usize>,
}

fn is_perm(p: &[usize], m: usize) -> bool {
    let mut seen = vec![false; m];
    p.len() == m && p.iter().all(|&i| i < m && !std::mem::replace(&mut seen[i], true))
}

impl IndexPattern {
    pub fn new(bars: Vec<bool>, left_order: Vec<usize>, right_order: Vec<usize>) -> Result<Self, InvariantError> {
        let m = bars.len();
        if !is_perm(&left_order, m) || !is_perm(&right_order, m) {
            return Err(InvariantError::BadPattern(format!("orders must be permutations of 0..{m}")));
        }
        Ok(Self { bars, left_order, right_order })
    }

    /// Consistent ordering with the given bars: indices applied `0, 1, ..` on the right.
    pub fn consistent(bars: Vec<bool>) -> Self {
        let m = bars.len();
        Self { bars, left_order: (0..m).rev().collect(), right_order: (0..m).collect() }
    }

    pub fn unbarred(m: usize) -> Self {
        Self::consistent(vec![false; m])
    }

    /// `k1` unbarred then `k2` barred indices.
    pub fn split(k1: usize, k2: usize) -> Self {
        let mut bars = vec![false; k1];
        bars.extend(vec![true; k2]);
        Self::consistent(bars)
    }

    /// All unbarred when `w` is not a nonnegative integer, otherwise all barred.
    pub fn default_for(w: &Weight, k: u32) -> Self {
        let m = k as usize - 1;
        let nonneg_int = w.w.is_integer() && w.w >= Rational::from_integer(0.into());
        Self::consistent(vec![nonneg_int; m])
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn bars(&self) -> &[bool] {
        &self.bars
    }

    pub fn is_consistent(&self) -> bool {
        self.left_order.iter().rev().eq(self.right_order.iter())
    }

    /// Numbers of unbarred and barred indices.
    pub fn counts(&self) -> (usize, usize) {
        let k2 = self.bars.iter().filter(|&&b| b).count();
        (self.bars.len() - k2, k2)
    }

    /// Every bar assignment combined with every pair of orderings, for `m` indices.
    pub fn all(m: usize) -> Vec<Self> {
        let perms = permutations(m);
        let mut out = Vec::new();
        for mask in 0..1u32 << m {
            let bars: Vec<bool> = (0..m).map(|i| mask >> i & 1 == 1).collect();
            for l in &perms {
                for r in &perms {
                    out.push(Self { bars: bars.clone(), left_order: l.clone(), right_order: r.clone() });
                }
            }
        }
        out
    }
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(m - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, m - 1);
            out.push(q);
        }
    }
    out
}

/// Runs `body` on the identity operator in `E(w)` and returns the resulting scalar operator.
pub fn extract(tr: &Tractor, w: &Weight, body: impl FnOnce(&Field<Operator>) -> Field<Operator>) -> Operator {
    let vars = tr.structure().frame().vars().clone();
    let f = Field::scalar(tr.sig(), w.clone(), Operator::identity(&vars));
    let r = body(&f);
    assert!(r.slots().is_empty(), "operator body must return a density");
    r.comp(&[])
}

/// The box operator on `E(w)` as a [`DiffOp`].
pub fn box_op(tr: &Tractor, w: &Weight) -> DiffOp {
    DiffOp::new(extract(tr, w, |f| tr.boxop(f)), w.clone(), w.shift(-1, -1))
}

/// The conjugate box operator on `E(w)`.
pub fn boxbar_op(tr: &Tractor, w: &Weight) -> DiffOp {
    DiffOp::new(extract(tr, w, |f| tr.boxbar(f)), w.clone(), w.shift(-1, -1))
}

/// `box^k` starting on `E(w)`, each factor acting on its own weight.
pub fn box_power(tr: &Tractor, w: &Weight, k: u32) -> DiffOp {
    let vars = tr.structure().frame().vars().clone();
    let mut acc = DiffOp::identity(&vars, w.clone());
    for j in 0..k as i64 {
        let b = box_op(tr, &w.shift(-j, -j));
        acc = b.compose(&acc).expect("weights chain");
    }
    acc
}

/// `boxbar^k` starting on `E(w)`.
pub fn boxbar_power(tr: &Tractor, w: &Weight, k: u32) -> DiffOp {
    let vars = tr.structure().frame().vars().clone();
    let mut acc = DiffOp::identity(&vars, w.clone());
    for j in 0..k as i64 {
        let b = boxbar_op(tr, &w.shift(-j, -j));
        acc = b.compose(&acc).expect("weights chain");
    }
    acc
}

/// The order `k` with `n + w + w' + 1 = k`.
pub fn resonant_order(n: usize, w: &Weight) -> Result<u32, InvariantError> {
    w.order(n).ok_or_else(|| InvariantError::NotResonant(w.to_string()))
}

/// `(-1)^{k-1} (k-1)! prod_{i<k1} (w-i) prod_{j<k2} (w'-j)` with `k = k1 + k2 + 1`.
pub fn flat_coefficient(k1: usize, k2: usize, w: &Weight) -> ExactScalar {
    ExactScalar::real(flat_factors(k1, k2, w).into_iter().fold(Rational::from_integer(1.into()), |a, (_, v)| a * v))
}

fn flat_factors(k1: usize, k2: usize, w: &Weight) -> Vec<(String, Rational)> {
    let k = k1 + k2 + 1;
    let fact: i64 = (1..k as i64).product();
    let sign = if (k - 1).is_multiple_of(2) { 1 } else { -1 };
    let mut out = vec![("(-1)^(k-1) (k-1)!".to_string(), rat(sign * fact, 1))];
    for i in 0..k1 as i64 {
        out.push((format!("w - {i}"), &w.w - rat(i, 1)));
    }
    for j in 0..k2 as i64 {
        out.push((format!("w' - {j}"), &w.wp - rat(j, 1)));
    }
    out
}

/// `box D_B..D_I D_Jbar..D_Qbar f - (-1)^{k-1} Z_B..Z_I Z_Jbar..Z_Qbar box^k f` with
/// `k1` unbarred and `k2` barred factors.
pub fn prelim_residual(tr: &Tractor, f: &Field<Poly>, k1: usize, k2: usize) -> Field<Poly> {
    let k = (k1 + k2 + 1) as u32;
    let mut lhs = f.clone();
    for _ in 0..k2 {
        lhs = tr.d_bar(&lhs);
    }
    for _ in 0..k1 {
        lhs = tr.d(&lhs);
    }
    lhs = tr.boxop(&lhs);
    let mut rhs = (0..k).fold(f.clone(), |g, _| tr.boxop(&g));
    for _ in 0..k2 {
        rhs = tr.times_zbar(&rhs);
    }
    for _ in 0..k1 {
        rhs = tr.times_z(&rhs);
    }
    let sign = if (k - 1).is_multiple_of(2) { 1 } else { -1 };
    lhs.sub(&rhs.scale_int(sign))
}

/// The unnormalized tractor expression `D^.. D^.. box D_.. D_.. f` for `pattern`.
pub fn tractor_form(tr: &Tractor, w: &Weight, pattern: &IndexPattern) -> Operator {
    extract(tr, w, |f| {
        let mut g = f.clone();
        let mut labels: Vec<usize> = Vec::new();
        for &idx in &pattern.right_order {
            g = if pattern.bars[idx] { tr.d_bar(&g) } else { tr.d(&g) };
            labels.insert(0, idx);
        }
        g = tr.boxop(&g);
        for &idx in &pattern.left_order {
            g = if pattern.bars[idx] { tr.d_bar_up(&g) } else { tr.d_up(&g) };
            let pos = labels.iter().position(|&l| l == idx).expect("label present");
            g = g.contract(0, pos + 1);
            labels.remove(pos);
        }
        g
    })
}

/// The invariant operator `E(w) -> E(w - k)`, normalized so that the flat operator is
/// `(-2 box)^k`.
pub fn build_invariant_operator(tr: &Tractor, w: &Weight, pattern: &IndexPattern) -> Result<DiffOp, InvariantError> {
    let k = resonant_order(tr.n(), w)?;
    if pattern.len() + 1 != k as usize {
        return Err(InvariantError::BadPattern(format!("need {} indices, got {}", k - 1, pattern.len())));
    }
    let (k1, k2) = pattern.counts();
    if let Some((name, _)) = flat_factors(k1, k2, w).into_iter().find(|(_, v)| v == &Rational::from_integer(0.into())) {
        return Err(InvariantError::ForbiddenWeight(name));
    }
    let c = flat_coefficient(k1, k2, w);
    let norm = ExactScalar::int((-2i64).pow(k)).checked_div(&c).expect("nonzero");
    let op = tractor_form(tr, w, pattern).scale(&norm);
    let kk = k as i64;
    Ok(DiffOp::new(op, w.clone(), w.shift(-kk, -kk)))
}

/// `L_{w,w'}` defined by `4 box D_A f = -Z_A L f` when `n + w + w' = 1`.
pub fn special_l(tr: &Tractor, w: &Weight) -> Result<DiffOp, InvariantError> {
    let n = tr.n();
    if resonant_order(n, w)? != 2 {
        return Err(InvariantError::NotResonant(w.to_string()));
    }
    let mut upper = Vec::new();
    let op = extract(tr, w, |f| {
        let g = tr.boxop(&tr.d(f));
        for (k, c) in g.iter() {
            if (k[0] as usize) < n + 1 && !c.is_zero() {
                upper.push(k[0]);
            }
        }
        let mut bot = Field::zero(tr.sig(), g.weight.shift(0, -1), vec![]);
        bot.set(vec![], g.comp(&[(n + 1) as u8]));
        bot
    });
    if !upper.is_empty() {
        return Err(InvariantError::NonvanishingSlots(format!("{upper:?}")));
    }
    Ok(DiffOp::new(op.scale(&ExactScalar::int(-4)), w.clone(), w.shift(-2, -2)))
}

/// `Delta_b^2 + T^2 + 4 Im nabla_b (A^{ab} nabla_a)` on `E(0,0)` for `n = 1`.
pub fn p00_formula(tr: &Tractor) -> Result<DiffOp, InvariantError> {
    let n = tr.n();
    if n != 1 {
        return Err(InvariantError::DimensionOnly(n));
    }
    let st = tr.structure();
    let w = Weight::zero();
    let sublap = |f: &Field<Operator>| {
        let a = st.nabla_ph(&st.nabla_ph(f, Dir::Hol), Dir::Anti).contract(0, 1);
        let b = st.nabla_ph(&st.nabla_ph(f, Dir::Anti), Dir::Hol).contract(0, 1);
        a.add(&b).scale_int(-1)
    };
    let a_up = st.curvature().a.conj().dualize(0).dualize(1);
    let torsion = |f: &Field<Operator>| {
        let x = st.nabla_ph(f, Dir::Hol).outer(&a_up).contract(0, 1);
        st.nabla_ph(&x, Dir::Hol).contract(0, 1)
    };
    let main = extract(tr, &w, |f| {
        let d0 = st.nabla_ph(&st.nabla_ph(f, Dir::Zero), Dir::Zero);
        sublap(&sublap(f)).add(&d0)
    });
    let x = extract(tr, &w, |f| torsion(f));
    // 4 Im X = -2i (X - Xbar)
    let im = x.sub(&x.conj()).scale(&ExactScalar::imag(-2, 1));
    Ok(DiffOp::new(main.add(&im), w.clone(), w.shift(-2, -2)))
}

/// `Q = (2/3) (Delta_b R - 2 Im nabla^a nabla^b A_ab)` for `n = 1`, weight `(-2,-2)`.
pub fn q_curvature_3d(st: &PhStructure) -> Result<Field<Poly>, InvariantError> {
    let n = st.n();
    if n != 1 {
        return Err(InvariantError::DimensionOnly(n));
    }
    let sig = st.sig();
    let cd = st.curvature();
    let r = Field::scalar(sig, Weight::ints(-1, -1), cd.p_trace.scale(&ExactScalar::int(2 * (n as i64 + 1))));
    let a = st.nabla_ph(&st.nabla_ph(&r, Dir::Hol), Dir::Anti).contract(0, 1);
    let b = st.nabla_ph(&st.nabla_ph(&r, Dir::Anti), Dir::Hol).contract(0, 1);
    let lap = a.add(&b).scale_int(-1).value();
    let div = st.nabla_ph(&cd.a, Dir::Anti).contract(1, 2);
    let dd = st.nabla_ph(&div, Dir::Anti).contract(0, 1).value();
    let im = (&dd - &dd.conj()).scale(&ExactScalar::imag(-1, 2));
    let q = (&lap - &im.scale(&ExactScalar::int(2))).scale(&ExactScalar::frac(2, 3));
    Ok(Field::scalar(sig, Weight::ints(-2, -2), q))
}

/// `X^t(1) - D_A g^A` where `X f = (D_A f) g^A`; vanishes by the pairing identity.
pub fn d_pairing_residual(tr: &Tractor, w: &Weight, g: &Field<Poly>) -> Poly {
    assert_eq!(g.slots(), &[Slot::TracUp], "g must be a single upper tractor");
    let x = extract(tr, w, |f| tr.d(f).outer(g).contract(0, 1));
    let one = Poly::one(tr.structure().frame().vars());
    let lhs = x.transpose().apply(&one);
    let rhs = tr.d(g).contract(0, 1).value();
    &lhs - &rhs
}

/// Dual weight `(-n-w, -n-w'-1)` for the pairing partner of `f in E(w)`.
pub fn pairing_partner_weight(n: usize, w: &Weight) -> Weight {
    let m = Rational::from_integer((-(n as i64)).into());
    Weight::new(&m - &w.w, &m - &w.wp - Rational::from_integer(1.into())).expect("integral difference preserved")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heisenberg::Signature;
    use crate::scalars::{parse_poly, VarSet};

    fn ups(n: usize, s: &str) -> Poly {
        parse_poly(s, &VarSet::heisenberg(n)).unwrap()
    }

    fn flat(s: &str) -> Tractor {
        Tractor::new(&PhStructure::flat(&Signature::parse(s).unwrap()))
    }

    fn rescaled(s: &str, u: &str) -> Tractor {
        let sig = Signature::parse(s).unwrap();
        Tractor::new(&PhStructure::rescaled(&sig, &ups(sig.n(), u)).unwrap())
    }

    fn minus_two_box_pow(tr: &Tractor, w: &Weight, k: u32) -> DiffOp {
        box_power(tr, w, k).scale(&ExactScalar::int((-2i64).pow(k)))
    }

    #[test]
    fn flat_coefficient_values() {
        let w = |a, b| Weight::ints(a, b);
        assert_eq!(flat_coefficient(0, 0, &w(0, 0)), ExactScalar::int(1));
        assert_eq!(flat_coefficient(1, 0, &w(2, -2)), ExactScalar::int(-2));
        assert_eq!(flat_coefficient(0, 1, &w(3, -2)), ExactScalar::int(2));
        assert_eq!(flat_coefficient(2, 0, &w(3, -2)), ExactScalar::int(12));
        assert_eq!(flat_coefficient(1, 1, &w(3, -2)), ExactScalar::int(-12));
    }

    #[test]
    fn first_order_case_is_minus_two_box() {
        let tr = flat("+");
        let w = Weight::ints(-1, 0);
        let p = build_invariant_operator(&tr, &w, &IndexPattern::unbarred(0)).unwrap();
        assert_eq!(p, box_op(&tr, &w).scale(&ExactScalar::int(-2)));
    }

    #[test]
    fn unnormalized_second_order_operator() {
        let tr = flat("+");
        let w = Weight::ints(2, -2);
        let raw = tractor_form(&tr, &w, &IndexPattern::unbarred(1));
        assert_eq!(raw, box_power(&tr, &w, 2).op.scale(&ExactScalar::int(-2)));
    }

    #[test]
    fn flat_operators_are_box_powers_for_every_pattern() {
        let tr = flat("+");
        for (w, wp) in [(2, -2), (-1, 1), (1, -1)] {
            let w = Weight::ints(w, wp);
            let want = minus_two_box_pow(&tr, &w, 2);
            for pat in IndexPattern::all(1) {
                match build_invariant_operator(&tr, &w, &pat) {
                    Ok(p) => assert_eq!(p, want, "{w} {pat:?}"),
                    Err(InvariantError::ForbiddenWeight(_)) => {}
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }

    #[test]
    fn preliminary_identity_for_all_splittings() {
        let tr = flat("+");
        let f = crate::sample::Sampler::new(7).field(tr.sig(), Weight::ints(3, -2), vec![], 5, 4);
        for k1 in 0..=2 {
            assert!(prelim_residual(&tr, &f, k1, 2 - k1).is_zero(), "k1 = {k1}");
        }
    }

    #[test]
    fn forbidden_normalization_is_named() {
        let tr = flat("+");
        let err = build_invariant_operator(&tr, &Weight::ints(0, 0), &IndexPattern::unbarred(1)).unwrap_err();
        assert_eq!(err, InvariantError::ForbiddenWeight("w - 0".into()));
        let err = build_invariant_operator(&tr, &Weight::ints(1, 1), &IndexPattern::unbarred(1)).unwrap_err();
        assert!(matches!(err, InvariantError::BadPattern(_)));
        for w in [Weight::ints(-3, 0), Weight::new(rat(1, 3), rat(1, 3)).unwrap()] {
            let err = build_invariant_operator(&tr, &w, &IndexPattern::unbarred(1)).unwrap_err();
            assert!(matches!(err, InvariantError::NotResonant(_)), "{w}");
        }
    }

    #[test]
    fn box_power_equals_conjugate_box_power() {
        let tr = flat("+");
        let w = Weight::ints(3, -2);
        assert_eq!(box_power(&tr, &w, 3).op, boxbar_power(&tr, &w, 3).op);
    }

    #[test]
    fn operator_is_cr_invariant() {
        let w = Weight::ints(2, -2);
        let pat = IndexPattern::unbarred(1);
        let p0 = build_invariant_operator(&flat("+"), &w, &pat).unwrap();
        let p1 = build_invariant_operator(&rescaled("+", "z1*zb1 + t + z1^2*zb1 + z1*zb1^2"), &w, &pat).unwrap();
        assert_eq!(p0, p1);
        let wb = Weight::ints(-1, 1);
        let bar = IndexPattern::split(0, 1);
        let q0 = build_invariant_operator(&flat("+-"), &wb.shift(-1, 0), &bar).unwrap();
        let q1 = build_invariant_operator(&rescaled("+-", "z1*zb2 + z2*zb1 + t"), &wb.shift(-1, 0), &bar).unwrap();
        assert_eq!(q0, q1);
    }

    #[test]
    fn box_is_invariant_at_resonance() {
        let w = Weight::new(rat(-1, 2), rat(-1, 2)).unwrap();
        let b0 = box_op(&flat("+"), &w);
        let b1 = box_op(&rescaled("+", "z1*zb1 + t^2 + z1 + zb1"), &w);
        assert_eq!(b0, b1);
    }

    #[test]
    fn invariant_operators_are_self_adjoint() {
        for tr in [flat("+"), rescaled("+", "z1*zb1 + t")] {
            for w in [Weight::ints(2, -2), Weight::ints(-1, 1)] {
                let pat = IndexPattern::default_for(&w, 2);
                let p = build_invariant_operator(&tr, &w, &pat).unwrap();
                assert_eq!(p.adjoint(1), p, "{w}");
            }
        }
        let tr = flat("+");
        let w = Weight::ints(-1, 0);
        let b = box_op(&tr, &w);
        assert_eq!(b.adjoint(1), b);
    }

    #[test]
    fn special_operator_matches_formula() {
        let tr = flat("+");
        let w = Weight::zero();
        let l = special_l(&tr, &w).unwrap();
        assert_eq!(l.op, box_power(&tr, &w, 2).op.scale(&ExactScalar::int(4)));
        let lap = delta_b(tr.structure().frame());
        let t = t_op(tr.structure().frame());
        let formula = lap.compose(&lap).add(&t.compose(&t));
        assert_eq!(p00_formula(&tr).unwrap().op, formula);
        assert_eq!(l.op, formula);

        let hat = rescaled("+", "z1*zb1 + t^2 + z1^2 + zb1^2");
        assert!(!hat.structure().curvature().a.is_zero());
        assert_eq!(special_l(&hat, &w).unwrap(), l);
        assert_eq!(p00_formula(&hat).unwrap(), l);
    }

    #[test]
    fn special_operator_equals_invariant_operator_for_nonzero_w() {
        let tr = flat("+");
        let w = Weight::ints(2, -2);
        let l = special_l(&tr, &w).unwrap();
        assert_eq!(l, build_invariant_operator(&tr, &w, &IndexPattern::unbarred(1)).unwrap());
    }

    #[test]
    fn q_curvature_transformation() {
        let sig = Signature::definite(1);
        let p00 = p00_formula(&flat("+")).unwrap();
        for u in ["t", "z1*zb1", "z1*zb1 + t^2 + z1^2 + zb1^2"] {
            let u = ups(1, u);
            let st = PhStructure::rescaled(&sig, &u).unwrap();
            let q = q_curvature_3d(&st).unwrap().value();
            assert_eq!(q, p00.op.apply(&u));
        }
        assert!(q_curvature_3d(&PhStructure::rescaled(&sig, &ups(1, "t")).unwrap()).unwrap().is_zero());
    }

    #[test]
    fn folland_stein_parameters() {
        for s in ["+", "++"] {
            let tr = flat(s);
            let n = tr.n() as i64;
            for w in [Weight::ints(-1, 3), Weight::new(rat(1, 2), rat(-3, 2)).unwrap()] {
                let b = box_op(&tr, &w).scale(&ExactScalar::int(-2));
                let alpha = folland_stein_factorize(&b.op, tr.structure().frame(), 1).unwrap();
                assert_eq!(alpha, vec![-(Rational::from_integer(n.into()) + &w.w * rat(2, 1))]);
            }
        }
        let tr = flat("+");
        let fr = tr.structure().frame();
        let p = p00_formula(&tr).unwrap();
        assert_eq!(folland_stein_factorize(&p.op, fr, 2).unwrap(), vec![rat(1, 1), rat(-1, 1)]);
        let w = Weight::ints(2, -2);
        let a2 = folland_stein_factorize(&minus_two_box_pow(&tr, &w, 2).op, fr, 2).unwrap();
        let first = |w: &Weight| folland_stein_factorize(&box_op(&tr, w).op.scale(&ExactScalar::int(-2)), fr, 1).unwrap()[0].clone();
        assert_eq!(a2, vec![first(&w.shift(-1, -1)), first(&w)]);
        assert!(folland_stein_factorize(&t_op(fr), fr, 1).is_none());
    }

    #[test]
    fn d_pairing_identity() {
        for tr in [flat("+"), rescaled("+", "z1*zb1 + t")] {
            let w = Weight::ints(1, -2);
            let gw = pairing_partner_weight(1, &w);
            let g = crate::sample::Sampler::new(3).field(tr.sig(), gw, vec![Slot::TracUp], 2, 2);
            assert!(d_pairing_residual(&tr, &w, &g).is_zero());
        }
    }

    #[test]
    fn matrix_of_composition() {
        let tr = flat("+");
        let fr = tr.structure().frame();
        let a = delta_b(fr);
        let b = t_op(fr);
        let ma = operator_matrix(&a, fr, 4);
        let mb = operator_matrix(&b, fr, 4);
        let mab = operator_matrix(&a.compose(&b), fr, 4);
        let dim = ma.basis.len();
        for i in 0..dim {
            for j in 0..dim {
                let mut acc = ExactScalar::int(0);
                for l in 0..dim {
                    acc += &(&ma.entries[i][l] * &mb.entries[l][j]);
                }
                assert_eq!(acc, mab.entries[i][j]);
            }
        }
        let id = operator_matrix(&Operator::identity(fr.vars()), fr, 2);
        for (i, row) in id.entries.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                assert_eq!(*x, ExactScalar::int((i == j) as i64));
            }
        }
    }

    #[test]
    fn records_round_trip() {
        let tr = flat("+");
        let b = box_op(&tr, &Weight::ints(1, 0));
        let r = b.to_record();
        let json = serde_json::to_string(&r).unwrap();
        let back: DiffOpRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(DiffOp::from_record(tr.structure().frame().vars(), &back).unwrap(), b);
    }
}
