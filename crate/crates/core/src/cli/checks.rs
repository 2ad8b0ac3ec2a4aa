//! Check groups, one per verification suite.

use std::fmt::Debug;

use num_traits::Zero;

use super::{Check, Context};
use crate::ambient::{proportionality, AmbientFunction, DefiningFunction, PhiRat};
use crate::heisenberg::{Dir, Field, Signature, Slot, Weight};
use crate::invariant_ops::{
    box_op, box_power, boxbar_power, build_invariant_operator, d_pairing_residual, delta_b, flat_coefficient, folland_stein_factorize,
    folland_stein_product, graded_basis, nonisotropic_weights, operator_matrix, p00_formula, pairing_partner_weight, prelim_residual,
    q_curvature_3d, special_l, t_op, tractor_form, DiffOp, IndexPattern, InvariantError, Operator,
};
use crate::sample::Sampler;
use crate::scalars::{rat, ExactScalar, Poly, RatFunc, Rational};
use crate::structures::PhStructure;
use crate::tractor::{Tractor, Transport};

const DIRS: [Dir; 3] = [Dir::Hol, Dir::Anti, Dir::Zero];

fn first_nonzero<T: Debug>(items: impl IntoIterator<Item = (T, bool)>) -> Option<T> {
    items.into_iter().find(|(_, z)| !z).map(|(t, _)| t)
}

fn all_zero(name: impl Into<String>, anchor: &'static str, fields: impl IntoIterator<Item = Field<Poly>>) -> Check {
    match first_nonzero(fields.into_iter().map(|f| {
        let z = f.is_zero();
        (f, z)
    })) {
        None => Check::new(name, anchor, true),
        Some(f) => Check::zero(name, anchor, &f, false),
    }
}

fn equal<T: PartialEq + Debug>(name: impl Into<String>, anchor: &'static str, lhs: &T, rhs: &T) -> Check {
    let ok = lhs == rhs;
    let c = Check::new(name, anchor, ok);
    if ok {
        c
    } else {
        let mut s = format!("lhs {lhs:?} rhs {rhs:?}");
        if s.len() > 400 {
            s.truncate(400);
            s.push_str("...");
        }
        c.with_witness(s)
    }
}

fn failed(name: impl Into<String>, anchor: &'static str, err: impl std::fmt::Display) -> Check {
    Check::new(name, anchor, false).with_witness(err.to_string())
}

fn ipow(base: i64, k: u32) -> ExactScalar {
    ExactScalar::int(base.pow(k))
}

fn weight(w: Rational, wp: Rational) -> Weight {
    Weight::new(w, wp).expect("integral difference")
}

/// The flat structure followed by each rescaling of it.
fn structures(ctx: &Context) -> Vec<(String, PhStructure)> {
    let mut out = vec![("flat".to_string(), PhStructure::flat(&ctx.sig))];
    for u in &ctx.upsilons {
        let st = PhStructure::rescaled(&ctx.sig, u).expect("real upsilon");
        out.push((format!("U = {u}"), st));
    }
    out
}

fn rescaled(ctx: &Context) -> Vec<(String, PhStructure)> {
    structures(ctx).into_iter().skip(1).collect()
}

/// Structure with random curvature data; two-dimensional when `n = 1`, where the
/// trace-free tensors vanish identically.
fn synthetic(ctx: &Context) -> PhStructure {
    let sig = if ctx.n() == 1 { Signature::parse("+-").expect("valid") } else { ctx.sig.clone() };
    let mut s = Sampler::new(ctx.seed);
    let r = s.curvature_tensor(&sig, 1, 2);
    let a = s.symmetric_torsion(&sig, 1, 2);
    PhStructure::synthetic_from(&sig, r, a)
}

fn density(ctx: &Context, s: &mut Sampler, w: Weight) -> Field<Poly> {
    s.field(&ctx.sig, w, vec![], ctx.degree, 4)
}

/// Two resonant weights of order `k` with no vanishing normalization factor.
fn generic_weights(n: usize, k: u32) -> Vec<Weight> {
    let total = rat(k as i64 - 1 - n as i64, 1);
    let half = rat(1, 2);
    let big = rat(k as i64 + 1, 1);
    vec![weight(half.clone(), &total - &half), weight(big.clone(), &total - &big)]
}

/// Candidate resonant weights of order `k`, in a fixed order.
fn resonant_candidates(n: usize, k: u32) -> Vec<Weight> {
    let total = rat(k as i64 - 1 - n as i64, 1);
    [(1, 2), (-1, 1), (2, 1), (-3, 2), (3, 1), (-2, 1), (5, 2), (0, 1), (1, 1)]
        .into_iter()
        .map(|(p, q)| {
            let w = rat(p, q);
            weight(w.clone(), &total - &w)
        })
        .collect()
}

pub fn dencomm(ctx: &Context) -> Vec<Check> {
    let mut s = Sampler::new(ctx.seed);
    let mut out = Vec::new();
    for (label, st) in structures(ctx) {
        let fs: Vec<_> = (0..5)
            .map(|_| {
                let w = s.weight();
                density(ctx, &mut s, w)
            })
            .collect();
        for law in 0..3 {
            let res = fs.iter().map(|f| st.dencomm_residuals(f)[law].clone());
            out.push(all_zero(format!("density commutator {} on {label} (5 densities)", law + 1), "dencomm", res));
        }
    }
    out
}

pub fn transform_laws(ctx: &Context) -> Vec<Check> {
    let mut out = Vec::new();
    for (label, st) in rescaled(ctx) {
        out.push(equal(format!("torsion law on {label}"), "transformation-laws", &st.t_from_definition(), &st.curvature().t));
        out.push(equal(format!("S law on {label}"), "transformation-laws", &st.s_from_definition(), &st.curvature().s));
    }
    let mut s = Sampler::new(ctx.seed);
    for pair in ctx.upsilons.windows(2) {
        let (u1, u2) = (&pair[0], &pair[1]);
        let stacked = PhStructure::rescaled(&ctx.sig, u1).and_then(|st| st.rescale(u2)).expect("real upsilon");
        let direct = PhStructure::rescaled(&ctx.sig, &(u1 + u2)).expect("real upsilon");
        let name = format!("rescalings by {u1} then {u2} compose");
        out.push(equal(format!("{name}: curvature"), "transformation-laws", stacked.curvature(), direct.curvature()));
        let f = s.field(&ctx.sig, Weight::ints(1, -2), vec![Slot::Hol, Slot::AntiUp], 2, 3);
        let res = DIRS.iter().map(|&d| stacked.nabla_ph(&f, d).sub(&direct.nabla_ph(&f, d)));
        out.push(all_zero(format!("{name}: connection"), "transformation-laws", res));
    }
    let mut all = structures(ctx);
    all.push(("synthetic".to_string(), synthetic(ctx)));
    for (label, st) in all {
        let h = st.levi_form();
        out.push(all_zero(format!("Levi form parallel on {label}"), "levi-parallel", DIRS.iter().map(|&d| st.nabla_ph(&h, d))));
    }
    out
}

fn dz_weights(n: usize) -> Vec<Weight> {
    let n = n as i64;
    let mut ws = vec![
        Weight::ints(-1, -1),
        Weight::ints(0, 0),
        Weight::ints(1, -2),
        Weight::ints(2, 1),
        weight(rat(1, 2), rat(-1, 2)),
        Weight::ints(-n - 1, 0),
        Weight::ints(-n - 2, 0),
    ];
    ws.push(Weight::ints(0, -n - 2));
    ws
}

pub fn tractor_algebra(ctx: &Context) -> Vec<Check> {
    let n = ctx.n();
    let flat = PhStructure::flat(&ctx.sig);
    let tf = Tractor::new(&flat);
    let mut out = Vec::new();
    for u in &ctx.upsilons {
        let m = Transport::new(&flat, u);
        out.push(equal(format!("M fixes Z_A (U = {u})"), "transport", &m.forward(&tf.z_lower()), &tf.z_lower()));
        out.push(equal(format!("M fixes Z^A (U = {u})"), "transport", &m.forward(&tf.z_upper()), &tf.z_upper()));
        out.push(equal(format!("M preserves h (U = {u})"), "transport", &m.forward(&tf.metric()), &tf.metric()));
    }
    let mut s = Sampler::new(ctx.seed);
    for (label, st) in structures(ctx) {
        let tr = Tractor::new(&st);
        let h = tr.metric();
        out.push(all_zero(format!("tractor metric parallel on {label}"), "metric-parallel", DIRS.iter().map(|&d| tr.nabla(&h, d))));
    }
    let trs = [("flat", tf.clone()), ("rescaled", Tractor::new(&rescaled(ctx)[0].1))];
    for (label, tr) in &trs {
        for w in dz_weights(n) {
            let f = density(ctx, &mut s, w.clone());
            let lhs = tr.d(&f.outer(&tr.z_upper())).contract(0, 1);
            let nn = Rational::from_integer((n as i64).into());
            let c = (&nn + &w.w + &w.wp + rat(2, 1)) * (&nn + &w.w + rat(1, 1));
            let vanishing = if c.is_zero() { ", vanishing factor" } else { "" };
            out.push(equal(format!("D_A Z^A f on {label}, w = {w}{vanishing}"), "DZ", &lhs, &f.scale(&ExactScalar::real(c))));
        }
        let res = [Weight::ints(1, 0), Weight::ints(0, -2), weight(rat(1, 3), rat(-2, 3))].into_iter().map(|w| {
            let f = density(ctx, &mut s, w);
            tr.d(&tr.d_up(&f)).contract(0, 1)
        });
        out.push(all_zero(format!("D_A D^A f = 0 on {label}"), "DD", res));
    }
    out
}

pub fn tractor_invariance(ctx: &Context) -> Vec<Check> {
    let flat = PhStructure::flat(&ctx.sig);
    let tb = Tractor::new(&flat);
    let mut s = Sampler::new(ctx.seed);
    let mut out = Vec::new();
    for u in &ctx.upsilons {
        let hat = flat.rescale(u).expect("real upsilon");
        let th = Tractor::new(&hat);
        let m = Transport::new(&flat, u);
        let f = density(ctx, &mut s, Weight::ints(1, -1));
        out.push(equal(format!("D_A invariant (U = {u})"), "D-invariance", &th.d(&f), &m.forward(&tb.d(&f))));
        out.push(equal(format!("D_Abar invariant (U = {u})"), "D-invariance", &th.d_bar(&f), &m.forward(&tb.d_bar(&f))));
        let g = s.field(&ctx.sig, Weight::ints(0, 1), vec![Slot::TracBar], 2, 2);
        out.push(equal(
            format!("D on tractor-valued densities invariant (U = {u})"),
            "D-invariance",
            &m.backward(&th.d(&m.forward(&g))),
            &tb.d(&g),
        ));
        let v = s.field(&ctx.sig, Weight::zero(), vec![Slot::Trac], ctx.degree, 3);
        let res = [Dir::Hol, Dir::Anti].map(|d| th.nabla(&m.forward(&v), d).sub(&m.forward(&tb.nabla(&v, d))));
        out.push(all_zero(format!("horizontal tractor connection invariant (U = {u})"), "connection-invariance", res));
        let x = s.field(&ctx.sig, Weight::ints(1, 0), vec![Slot::Trac, Slot::Hol], 2, 2);
        let res = DIRS.map(|d| th.nabla(&x.dualize(0), d).sub(&th.nabla(&x, d).dualize(0)));
        out.push(all_zero(format!("raising commutes with the connection (U = {u})"), "metric-parallel", res));
    }
    out
}

pub fn curvature_vanishing(ctx: &Context) -> Vec<Check> {
    let mut s = Sampler::new(ctx.seed);
    let mut out = Vec::new();
    for (label, st) in rescaled(ctx) {
        let tr = Tractor::new(&st);
        let tc = tr.curvature();
        for (name, t) in [("S", &tc.s), ("V", &tc.v), ("U", &tc.u), ("Q", &tc.q), ("Y", &tc.y)] {
            out.push(Check::zero(format!("tractor curvature {name} = 0 on {label}"), "tractor-curvature", t, t.is_zero()));
        }
        let v = s.field(&ctx.sig, Weight::zero(), vec![Slot::Trac], 2, 3);
        out.push(all_zero(format!("connection commutators on {label}"), "tractor-curvature", tr.commutator_residuals(&v)));
    }
    let tr = Tractor::new(&synthetic(ctx));
    let tc = tr.curvature();
    out.push(Check::new("synthetic S, V, U nonzero", "tractor-curvature", !tc.s.is_zero() && !tc.v.is_zero() && !tc.u.is_zero()));
    out.push(all_zero("synthetic S trace-free", "tractor-curvature", [tc.s.contract(0, 1)]));
    out.push(equal("synthetic S symmetric", "tractor-curvature", &tc.s, &tc.s.permute(&[2, 1, 0, 3])));
    out.push(all_zero("synthetic V and U trace-free", "tractor-curvature", [tc.v.contract(0, 1), tc.u.contract(0, 1)]));
    out.push(all_zero("synthetic curvature trace", "notrace", [tr.omega_hol_anti(&tc).contract(0, 1)]));
    out
}

fn prelim_kmax(ctx: &Context) -> u32 {
    if ctx.n() == 1 {
        ctx.kmax
    } else {
        ctx.kmax.min(2)
    }
}

pub fn flat_identities(ctx: &Context) -> Vec<Check> {
    let n = ctx.n() as i64;
    let tr = Tractor::new(&PhStructure::flat(&ctx.sig));
    let mut s = Sampler::new(ctx.seed);
    let w = Weight::ints(2, -1);
    let f = density(ctx, &mut s, w.clone());
    let g = s.field(&ctx.sig, Weight::ints(1, 0), vec![Slot::TracBar], ctx.degree, 2);
    let mut out = Vec::new();
    for (name, r) in tr.d_commutators(&f).into_iter().chain(tr.d_commutators(&g)) {
        out.push(Check::zero(format!("[{name}] = 0"), "commute", &r, r.is_zero()));
    }
    let r = tr.box_power_z_residual(&f, 1);
    out.push(Check::zero("[box, Z_A] = Dtilde_A", "boxz", &r, r.is_zero()));

    let trs = [("flat", tr.clone()), ("rescaled", Tractor::new(&rescaled(ctx)[0].1))];
    for (label, t) in &trs {
        for w in [Weight::ints(1, 0), Weight::ints(0, -2), weight(rat(1, 3), rat(-2, 3))] {
            let f = density(ctx, &mut s, w.clone());
            let tot = Rational::from_integer(n.into()) + &w.w + &w.wp;
            let p = f.mul_scalar(&t.structure().curvature().p_trace, &Weight::ints(-1, -1));
            let want = t
                .nabla(&f, Dir::Zero)
                .scale(&ExactScalar::i())
                .add(&p.scale(&ExactScalar::real((&w.wp - &w.w) / rat(n + 2, 1))))
                .scale(&ExactScalar::real(tot.clone()));
            out.push(equal(format!("box - boxbar on {label}, w = {w}"), "boxdiff", &t.boxop(&f).sub(&t.boxbar(&f)), &want));
            let rhs = t.d_tilde(&f).scale(&ExactScalar::real(tot)).sub(&t.times_z(&t.boxop(&f)));
            out.push(equal(format!("D_A expansion on {label}, w = {w}"), "CRexp", &t.d(&f), &rhs));
        }
    }

    let r = tr.box_dtilde_residual(&f);
    out.push(Check::zero("[box, Dtilde_A] = 0", "box-dtilde", &r, r.is_zero()));
    for k in 1..=4 {
        let r = tr.box_power_z_residual(&f, k);
        out.push(Check::zero(format!("[box^{k}, Z_A] = {k} box^{} Dtilde_A", k - 1), "box-power-z", &r, r.is_zero()));
    }

    for k in 1..=prelim_kmax(ctx) {
        let f = density(ctx, &mut s, generic_weights(ctx.n(), k).remove(1));
        for k1 in 0..k as usize {
            let k2 = k as usize - 1 - k1;
            let r = prelim_residual(&tr, &f, k1, k2);
            out.push(Check::zero(format!("box D^{k1} Dbar^{k2} f = (-1)^(k-1) Z^{k1} Zbar^{k2} box^{k} f"), "prelim", &r, r.is_zero()));
        }
    }

    for k in 1..=ctx.kmax {
        for w in generic_weights(ctx.n(), k) {
            let bk = box_power(&tr, &w, k).op;
            let patterns = if k <= 2 { IndexPattern::all(k as usize - 1) } else { consistent_patterns(k) };
            let bad = patterns.iter().find(|p| {
                let (k1, k2) = p.counts();
                tractor_form(&tr, &w, p) != bk.scale(&flat_coefficient(k1, k2, &w))
            });
            let c = Check::new(
                format!("flat tractor form = coefficient * box^{k}, w = {w}, {} patterns", patterns.len()),
                "flatop",
                bad.is_none(),
            );
            out.push(match bad {
                Some(p) => c.with_witness(format!("{p:?}")),
                None => c,
            });
        }
        for w in generic_weights(ctx.n(), k) {
            out.push(equal(
                format!("box^{k} = boxbar^{k}, w = {w}"),
                "conjugation",
                &box_power(&tr, &w, k).op,
                &boxbar_power(&tr, &w, k).op,
            ));
        }
    }
    out
}

/// Consistently ordered patterns for every bar assignment of `k - 1` indices.
pub fn consistent_patterns(k: u32) -> Vec<IndexPattern> {
    let m = k as usize - 1;
    (0..1u32 << m).map(|mask| IndexPattern::consistent((0..m).map(|i| mask >> i & 1 == 1).collect())).collect()
}

fn minus_two_box_pow(tr: &Tractor, w: &Weight, k: u32) -> DiffOp {
    box_power(tr, w, k).scale(&ipow(-2, k))
}

pub fn normalization(ctx: &Context) -> Vec<Check> {
    let tr = Tractor::new(&PhStructure::flat(&ctx.sig));
    let fr = tr.structure().frame();
    let iso = vec![1; fr.vars().len()];
    let lap = delta_b(fr);
    let mut out = Vec::new();
    for k in 1..=ctx.kmax {
        for w in generic_weights(ctx.n(), k) {
            let want = minus_two_box_pow(&tr, &w, k);
            let patterns = if k <= 2 { IndexPattern::all(k as usize - 1) } else { consistent_patterns(k) };
            let mut bad = None;
            for p in &patterns {
                match build_invariant_operator(&tr, &w, p) {
                    Ok(op) if op == want => {}
                    Ok(_) => bad = Some(format!("{p:?}")),
                    Err(e) => bad = Some(format!("{p:?}: {e}")),
                }
            }
            let c = Check::new(format!("flat P = (-2 box)^{k}, w = {w}, {} patterns", patterns.len()), "normalization", bad.is_none());
            out.push(match bad {
                Some(b) => c.with_witness(b),
                None => c,
            });
            let p = want.op;
            let order = 2 * k;
            out.push(equal(
                format!("isotropic principal part of P = that of Delta_b^{k}, w = {w}"),
                "principal-symbol",
                &p.part_of_order(order, &iso),
                &lap.pow(k).part_of_order(order, &iso),
            ));
            let bad = dilation_defect(&p, fr, order, order + 1);
            out.push(Check::zero(
                format!("P is homogeneous of order {order} under Heisenberg dilations, w = {w}"),
                "principal-symbol",
                &bad,
                bad.is_none(),
            ));
            match folland_stein_factorize(&p, fr, k) {
                None => out.push(failed(format!("Folland-Stein factorization, w = {w}"), "folland-stein", "no exact factorization")),
                Some(alpha) => {
                    let prod = folland_stein_product(&alpha, fr);
                    let shown: Vec<String> = alpha.iter().map(crate::scalars::fmt_rational).collect();
                    out.push(
                        equal(format!("P = prod (Delta_b + i alpha_j T), w = {w}"), "folland-stein", &prod, &p)
                            .with_witness(format!("alpha = [{}]", shown.join(", "))),
                    );
                    let bound = order;
                    let mp = operator_matrix(&p, fr, bound);
                    let factors = alpha
                        .iter()
                        .map(|a| operator_matrix(&folland_stein_product(std::slice::from_ref(a), fr), fr, bound))
                        .reduce(|acc, m| acc.compose(&m))
                        .expect("k >= 1");
                    out.push(equal(format!("matrix of P = product of factor matrices, w = {w}"), "folland-stein", &mp, &factors));
                }
            }
        }
    }
    if ctx.n() == 1 {
        let p00 = p00_formula(&tr).map(|p| p.op);
        let t = t_op(fr);
        let formula = lap.compose(&lap).add(&t.compose(&t));
        match p00 {
            Ok(p) => {
                out.push(equal("flat P00 = Delta_b^2 + T^2", "P00", &p, &formula));
                let alpha = folland_stein_factorize(&p, fr, 2);
                out.push(equal("Folland-Stein parameters of P00", "folland-stein", &alpha, &Some(vec![rat(1, 1), rat(-1, 1)])));
            }
            Err(e) => out.push(failed("flat P00", "P00", e)),
        }
    }
    out
}

/// First monomial of nonisotropic degree `d <= bound` whose image under `op` is not
/// homogeneous of degree `d - order`.
fn dilation_defect(op: &Operator, fr: &crate::heisenberg::Frame, order: u32, bound: u32) -> Option<Poly> {
    let weights = nonisotropic_weights(fr);
    graded_basis(fr, bound).into_iter().find_map(|m| {
        let d = m.weighted_degree(&weights) as i64;
        let img = op.apply(&Poly::monomial(fr.vars(), m, ExactScalar::int(1)));
        let ok = img.terms().all(|(mm, _)| mm.weighted_degree(&weights) as i64 == d - order as i64);
        (!ok).then_some(img)
    })
}

/// Up to four resonant weights of order `k` for which the flat operator is defined.
pub fn admissible_weights(ctx: &Context, tr: &Tractor, k: u32) -> Vec<(Weight, IndexPattern)> {
    if let Some(w) = &ctx.weight {
        if w.order(ctx.n()) == Some(k) {
            let p = ctx.pattern.clone().unwrap_or_else(|| IndexPattern::default_for(w, k));
            return vec![(w.clone(), p)];
        }
        return Vec::new();
    }
    resonant_candidates(ctx.n(), k)
        .into_iter()
        .map(|w| {
            let p = IndexPattern::default_for(&w, k);
            (w, p)
        })
        .filter(|(w, p)| build_invariant_operator(tr, w, p).is_ok())
        .take(4)
        .collect()
}

fn orders(ctx: &Context) -> Vec<u32> {
    match ctx.k {
        Some(k) => vec![k],
        None => (1..=ctx.kmax).collect(),
    }
}

pub fn operator_invariance(ctx: &Context) -> Vec<Check> {
    let n = ctx.n();
    let tf = Tractor::new(&PhStructure::flat(&ctx.sig));
    let hats: Vec<_> = rescaled(ctx).into_iter().map(|(l, st)| (l, Tractor::new(&st))).collect();
    let mut out = Vec::new();
    for k in orders(ctx) {
        for (w, pat) in admissible_weights(ctx, &tf, k) {
            let p0 = build_invariant_operator(&tf, &w, &pat);
            for (label, th) in &hats {
                let name = format!("P invariant, k = {k}, w = {w}, {label}");
                out.push(match (&p0, build_invariant_operator(th, &w, &pat)) {
                    (Ok(a), Ok(b)) => equal(name, "invariance", &b, a),
                    (Err(e), _) => failed(name, "invariance", e),
                    (_, Err(e)) => failed(name, "invariance", e),
                });
            }
        }
    }
    let half = rat(-(n as i64), 2);
    for w in [weight(half.clone(), half), Weight::ints(0, -(n as i64))] {
        let b0 = box_op(&tf, &w);
        for (label, th) in &hats {
            out.push(equal(format!("box invariant at w = {w}, {label}"), "invariance", &box_op(th, &w), &b0));
        }
    }
    out
}

/// Weights with `n + w + w' = 1`.
fn special_weights(n: usize) -> Vec<Weight> {
    let n = n as i64;
    vec![Weight::ints(0, 1 - n), Weight::ints(2, -1 - n), Weight::ints(-1, 2 - n), weight(rat(1, 2), rat(1, 2) - rat(n, 1))]
}

pub fn special_case(ctx: &Context) -> Vec<Check> {
    let n = ctx.n();
    let trs: Vec<_> = structures(ctx).into_iter().map(|(l, st)| (l, Tractor::new(&st))).collect();
    let mut out = Vec::new();
    for (label, tr) in &trs {
        for w in special_weights(n) {
            let name = format!("upper slots of box D_A f vanish, w = {w}, {label}");
            let l = special_l(tr, &w);
            out.push(match &l {
                Ok(_) => Check::new(name, "special-L", true),
                Err(e) => failed(name, "special-L", e),
            });
            let Ok(l) = l else { continue };
            if w.w.is_zero() {
                if n == 1 {
                    let name = format!("L00 = P00 formula, {label}");
                    out.push(match p00_formula(tr) {
                        Ok(p) => equal(name, "P00", &l, &p),
                        Err(e) => failed(name, "P00", e),
                    });
                }
                continue;
            }
            match build_invariant_operator(tr, &w, &IndexPattern::default_for(&w, 2)) {
                Ok(p) => out.push(equal(format!("L = P, w = {w}, {label}"), "special-L", &l, &p)),
                Err(InvariantError::ForbiddenWeight(_)) => {}
                Err(e) => out.push(failed(format!("L = P, w = {w}, {label}"), "special-L", e)),
            }
        }
    }
    out
}

pub fn self_adjointness(ctx: &Context) -> Vec<Check> {
    let n = ctx.n();
    let tf = Tractor::new(&PhStructure::flat(&ctx.sig));
    let th = Tractor::new(&rescaled(ctx)[0].1);
    let trs = [("flat", &tf), ("rescaled", &th)];
    let mut out = Vec::new();
    for k in orders(ctx) {
        for w in generic_weights(n, k) {
            for pat in consistent_patterns(k) {
                for (label, tr) in trs {
                    let name = format!("P self-adjoint, k = {k}, w = {w}, bars {:?}, {label}", pat.bars());
                    match build_invariant_operator(tr, &w, &pat) {
                        Ok(p) => out.push(equal(name, "self-adjoint", &p.adjoint(n), &p)),
                        Err(InvariantError::ForbiddenWeight(_)) => {}
                        Err(e) => out.push(failed(name, "self-adjoint", e)),
                    }
                }
            }
        }
    }
    let half = rat(-(n as i64), 2);
    for w in [weight(half.clone(), half), Weight::ints(0, -(n as i64))] {
        let b = box_op(&tf, &w);
        out.push(equal(format!("flat box self-adjoint at w = {w}"), "self-adjoint", &b.adjoint(n), &b));
    }
    let mut s = Sampler::new(ctx.seed);
    for (label, tr) in trs {
        for w in [Weight::ints(1, -2), Weight::ints(0, 0), weight(rat(1, 2), rat(-1, 2))] {
            let g = s.field(&ctx.sig, pairing_partner_weight(n, &w), vec![Slot::TracUp], 2, 2);
            let r = d_pairing_residual(tr, &w, &g);
            out.push(Check::zero(format!("D pairing identity, w = {w}, {label}"), "pairing", &r, r.is_zero()));
        }
    }
    out
}

pub fn q_curvature(ctx: &Context) -> Vec<Check> {
    if ctx.n() != 1 {
        return Vec::new();
    }
    let flat = PhStructure::flat(&ctx.sig);
    let p00 = match p00_formula(&Tractor::new(&flat)) {
        Ok(p) => p.op,
        Err(e) => return vec![failed("P00", "CRQ", e)],
    };
    let mut out = Vec::new();
    for (u, (label, st)) in ctx.upsilons.iter().zip(rescaled(ctx)) {
        let name = format!("Q = P00 U on {label}");
        out.push(match q_curvature_3d(&st) {
            Ok(q) => equal(name, "CRQ", &q.value(), &p00.apply(u)),
            Err(e) => failed(name, "CRQ", e),
        });
    }
    out.push(match q_curvature_3d(&flat) {
        Ok(q) => Check::zero("Q = 0 on the flat structure", "CRQ", &q, q.is_zero()),
        Err(e) => failed("Q = 0 on the flat structure", "CRQ", e),
    });
    out
}

fn constant_of(r: &RatFunc) -> Option<ExactScalar> {
    r.as_poly().and_then(|p| p.as_constant())
}

pub fn ambient(ctx: &Context) -> Vec<Check> {
    let n = ctx.n();
    let mut dfs = vec![(format!("Heisenberg phi, signature {}", ctx.sig), DefiningFunction::heisenberg(&ctx.sig))];
    if ctx.sig.positive() == n {
        dfs.push(("sphere phi".to_string(), DefiningFunction::sphere(n)));
    }
    let mut out = Vec::new();
    for (label, df) in &dfs {
        let j = df.monge_ampere_j();
        out.push(Check::new(format!("J constant for {label}"), "J", constant_of(j).is_some()).with_witness(format!("J = {j}")));
        let t = df.transverse_residuals();
        out.push(Check::zero(format!("transverse field equations for {label}"), "def", &t, t.iter().all(RatFunc::is_zero)));
        let r = df.raise_residuals();
        out.push(Check::zero(format!("raised phi equations for {label}"), "raise", &r, r.iter().all(RatFunc::is_zero)));
        let tr = df.trace_residual();
        out.push(Check::zero(format!("trace identity for {label}"), "r", &tr, tr.is_zero()));
        out.push(Check::new(format!("inverse Kahler metric extends across phi = 0 for {label}"), "raise", df.inverse_metric_extends()));
        out.push(Check::new(format!("ambient metric factorization for {label}"), "factor", df.check_factorization()));
        out.push(Check::new(format!("ambient inverse metric for {label}"), "inverse", df.check_inverse()));
        let zero = AmbientFunction { hom: Weight::zero(), body: PhiRat::from_rat(df.phi_rat(), RatFunc::one(df.vars())) };
        let lap = df.ambient_laplacian(&zero).body;
        out.push(Check::zero(format!("ambient Laplacian kills constants for {label}"), "homoglapl", &lap, lap.is_zero()));
        let us = df.random_functions(ctx.seed, 3);
        for (i, u) in us.iter().enumerate() {
            let i = i as i64;
            let w = Weight::ints(i - 1, 2 - 2 * i);
            let name = format!("homogeneous Laplacian identity for {label}, w = {w}, sample {}", i + 1);
            out.push(match df.homogeneous_identity_residual(&w, u) {
                Ok(r) => Check::zero(name, "homoglapl", &r, r.is_zero()),
                Err(e) => failed(name, "homoglapl", e),
            });
        }
        for w in [rat(0, 1), rat(-1, 1), rat(-1, 2), rat(1, 3)] {
            let rs: Vec<_> = us[..2].iter().map(|u| df.scattering_residual(&w, u)).collect();
            let ok = rs.iter().all(PhiRat::is_zero);
            out.push(Check::zero(format!("scattering identity for {label}, w = {}", crate::scalars::fmt_rational(&w)), "scat", &rs, ok));
        }
    }
    out
}

/// How boundary data are identified with densities in the obstruction checks.
pub const TRIVIALIZATION: &str = "boundary value of z0^w zb0^w' u in the flat zeta0 trivialization, t = s/2";

fn flat_power(sig: &Signature, w: &Weight, k: u32) -> Operator {
    minus_two_box_pow(&Tractor::new(&PhStructure::flat(sig)), w, k).op
}

pub fn obstruction(ctx: &Context) -> Vec<Check> {
    let n = ctx.n() as i64;
    let df = DefiningFunction::heisenberg(&ctx.sig);
    let ad = match df.adapted() {
        Ok(a) => a,
        Err(e) => return vec![failed("adapted coordinates", "obstruction", e)],
    };
    let mut s = Sampler::new(ctx.seed);
    let vars = crate::scalars::VarSet::heisenberg(ctx.n());
    let fs: Vec<Poly> = (0..5).map(|_| s.poly(&vars, 4, 4)).collect();
    let mut out = Vec::new();
    for k in [1u32, 2] {
        let total = k as i64 - 1 - n;
        for a in [0, -1, 1] {
            let w = Weight::ints(a, total - a);
            let p = flat_power(&ctx.sig, &w, k);
            let name = format!("obstruction is a multiple of P f, k = {k}, w = {w}, 5 polynomials");
            let pairs: Result<Vec<_>, _> = fs.iter().map(|f| ad.obstruction(&w, f, k).map(|o| (o, p.apply(f)))).collect();
            out.push(match pairs {
                Ok(pairs) => match proportionality(&pairs) {
                    Some(c) => Check::new(name, "obstruction", true).with_witness(format!("c = {c}; {TRIVIALIZATION}")),
                    None => Check::new(name, "obstruction", false).with_witness("no common constant"),
                },
                Err(e) => failed(name, "obstruction", e),
            });
        }
    }
    let fr = crate::heisenberg::Frame::new(&ctx.sig);
    let shift: Vec<ExactScalar> = (0..ctx.n()).map(|a| ExactScalar::new(rat(1, 1), rat(-(a as i64) - 1, 2))).collect();
    let t = ExactScalar::frac(3, 2);
    let w = Weight::ints(0, 1 - n);
    let res: Result<Vec<bool>, _> = fs[..3]
        .iter()
        .map(|f| {
            Ok::<_, crate::ambient::AmbientError>(
                ad.obstruction(&w, &fr.translate(f, &shift, &t), 2)? == fr.translate(&ad.obstruction(&w, f, 2)?, &shift, &t),
            )
        })
        .collect();
    let name = "obstruction commutes with Heisenberg translations";
    out.push(match res {
        Ok(v) => Check::new(name, "obstruction", v.iter().all(|&b| b)),
        Err(e) => failed(name, "obstruction", e),
    });
    out
}
