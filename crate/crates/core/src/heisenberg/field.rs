//! Weighted tensor fields with Greek and tractor index slots.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_traits::Zero;

use crate::scalars::{ExactScalar, Poly, VarSet};

use super::{Signature, Weight};

/// Kind of a single index slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    /// Lower holomorphic Greek index.
    Hol,
    HolUp,
    /// Lower antiholomorphic Greek index.
    Anti,
    AntiUp,
    /// Lower tractor index.
    Trac,
    TracUp,
    /// Lower conjugate tractor index.
    TracBar,
    TracBarUp,
}

/// A Greek index produced by a tractor slot sitting at a middle value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SlotShape {
    pub dw: i64,
    pub dwp: i64,
    pub greek: Option<Slot>,
}

impl Slot {
    pub fn dim(self, n: usize) -> usize {
        if self.is_tractor() {
            n + 2
        } else {
            n
        }
    }

    pub fn is_tractor(self) -> bool {
        matches!(self, Slot::Trac | Slot::TracUp | Slot::TracBar | Slot::TracBarUp)
    }

    pub fn is_upper(self) -> bool {
        matches!(self, Slot::HolUp | Slot::AntiUp | Slot::TracUp | Slot::TracBarUp)
    }

    pub fn is_barred(self) -> bool {
        matches!(self, Slot::Anti | Slot::AntiUp | Slot::TracBar | Slot::TracBarUp)
    }

    pub fn conj(self) -> Slot {
        match self {
            Slot::Hol => Slot::Anti,
            Slot::HolUp => Slot::AntiUp,
            Slot::Anti => Slot::Hol,
            Slot::AntiUp => Slot::HolUp,
            Slot::Trac => Slot::TracBar,
            Slot::TracUp => Slot::TracBarUp,
            Slot::TracBar => Slot::Trac,
            Slot::TracBarUp => Slot::TracUp,
        }
    }

    /// The slot obtained by raising or lowering with the (tractor) metric.
    pub fn metric_dual(self) -> Slot {
        match self {
            Slot::Hol => Slot::AntiUp,
            Slot::HolUp => Slot::Anti,
            Slot::Anti => Slot::HolUp,
            Slot::AntiUp => Slot::Hol,
            Slot::Trac => Slot::TracBarUp,
            Slot::TracUp => Slot::TracBar,
            Slot::TracBar => Slot::TracUp,
            Slot::TracBarUp => Slot::Trac,
        }
    }

    /// The slot paired with this one by plain contraction.
    pub fn contragredient(self) -> Slot {
        match self {
            Slot::Hol => Slot::HolUp,
            Slot::HolUp => Slot::Hol,
            Slot::Anti => Slot::AntiUp,
            Slot::AntiUp => Slot::Anti,
            Slot::Trac => Slot::TracUp,
            Slot::TracUp => Slot::Trac,
            Slot::TracBar => Slot::TracBarUp,
            Slot::TracBarUp => Slot::TracBar,
        }
    }

    /// Weight offset and induced Greek index of a tractor slot at `value`.
    /// Greek slots report their own kind and no offset.
    pub fn shape(self, value: usize, n: usize) -> SlotShape {
        let part = if value == 0 {
            0
        } else if value == n + 1 {
            2
        } else {
            1
        };
        let (top, bot, greek) = match self {
            Slot::Trac => ((1, 0), (0, -1), Slot::Hol),
            Slot::TracUp => ((-1, 0), (0, 1), Slot::HolUp),
            Slot::TracBar => ((0, 1), (-1, 0), Slot::Anti),
            Slot::TracBarUp => ((0, -1), (1, 0), Slot::AntiUp),
            g => return SlotShape { dw: 0, dwp: 0, greek: Some(g) },
        };
        match part {
            0 => SlotShape { dw: top.0, dwp: top.1, greek: None },
            1 => SlotShape { dw: top.0, dwp: top.1, greek: Some(greek) },
            _ => SlotShape { dw: bot.0, dwp: bot.1, greek: None },
        }
    }
}

/// Component type of a field: something the frame can differentiate.
pub trait Coeff: Clone + PartialEq + fmt::Debug {
    fn zero(vars: &Arc<VarSet>) -> Self;
    fn is_zero(&self) -> bool;
    fn add_scaled(&mut self, c: &ExactScalar, o: &Self);
    /// `self += p * o`.
    fn add_mul(&mut self, p: &Poly, o: &Self);
    fn scale(&self, c: &ExactScalar) -> Self;
    /// Left multiplication by a polynomial.
    fn mul_poly(&self, p: &Poly) -> Self;
    /// Left composition with the coordinate derivative in variable `i`.
    fn d(&self, i: usize) -> Self;

    fn add_assign(&mut self, o: &Self) {
        self.add_scaled(&ExactScalar::int(1), o);
    }
}

impl Coeff for Poly {
    fn zero(vars: &Arc<VarSet>) -> Self {
        Poly::zero(vars)
    }
    fn is_zero(&self) -> bool {
        Poly::is_zero(self)
    }
    fn add_scaled(&mut self, c: &ExactScalar, o: &Self) {
        Poly::add_scaled(self, c, o)
    }
    fn add_mul(&mut self, p: &Poly, o: &Self) {
        if !p.is_zero() && !o.is_zero() {
            self.add_assign_ref(&(p * o));
        }
    }
    fn scale(&self, c: &ExactScalar) -> Self {
        Poly::scale(self, c)
    }
    fn mul_poly(&self, p: &Poly) -> Self {
        p * self
    }
    fn d(&self, i: usize) -> Self {
        self.derivative(i)
    }
}

pub type Key = Vec<u8>;

/// A section of a weighted tensor bundle, stored componentwise.
#[derive(Clone, PartialEq)]
pub struct Field<C> {
    sig: Signature,
    vars: Arc<VarSet>,
    pub weight: Weight,
    slots: Vec<Slot>,
    comps: BTreeMap<Key, C>,
}

impl<C: Coeff> Field<C> {
    pub fn zero(sig: &Signature, weight: Weight, slots: Vec<Slot>) -> Self {
        Self { sig: sig.clone(), vars: VarSet::heisenberg(sig.n()), weight, slots, comps: BTreeMap::new() }
    }

    /// A scalar field (no slots).
    pub fn scalar(sig: &Signature, weight: Weight, c: C) -> Self {
        let mut f = Self::zero(sig, weight, Vec::new());
        f.set(Vec::new(), c);
        f
    }

    pub fn sig(&self) -> &Signature {
        &self.sig
    }

    pub fn n(&self) -> usize {
        self.sig.n()
    }

    pub fn vars(&self) -> &Arc<VarSet> {
        &self.vars
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn zero_like(&self) -> Self {
        Self::zero(&self.sig, self.weight.clone(), self.slots.clone())
    }

    pub fn with_shape(&self, weight: Weight, slots: Vec<Slot>) -> Self {
        Self::zero(&self.sig, weight, slots)
    }

    pub fn get(&self, key: &[u8]) -> Option<&C> {
        self.comps.get(key)
    }

    pub fn comp(&self, key: &[u8]) -> C {
        self.comps.get(key).cloned().unwrap_or_else(|| C::zero(&self.vars))
    }

    /// The single component of a scalar field.
    pub fn value(&self) -> C {
        debug_assert!(self.slots.is_empty());
        self.comp(&[])
    }

    pub fn set(&mut self, key: Key, c: C) {
        debug_assert_eq!(key.len(), self.slots.len());
        if c.is_zero() {
            self.comps.remove(&key);
        } else {
            self.comps.insert(key, c);
        }
    }

    pub fn add_at(&mut self, key: Key, c: &C) {
        self.add_scaled_at(key, &ExactScalar::int(1), c);
    }

    pub fn add_scaled_at(&mut self, key: Key, s: &ExactScalar, c: &C) {
        debug_assert_eq!(key.len(), self.slots.len());
        if c.is_zero() || s.is_zero() {
            return;
        }
        let vars = self.vars.clone();
        let e = self.comps.entry(key).or_insert_with(|| C::zero(&vars));
        e.add_scaled(s, c);
    }

    pub fn add_mul_at(&mut self, key: Key, p: &Poly, c: &C) {
        if c.is_zero() || p.is_zero() {
            return;
        }
        let vars = self.vars.clone();
        self.comps.entry(key).or_insert_with(|| C::zero(&vars)).add_mul(p, c);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Key, &C)> {
        self.comps.iter()
    }

    /// Drops components that cancelled to zero.
    pub fn prune(&mut self) {
        self.comps.retain(|_, c| !c.is_zero());
    }

    pub fn is_zero(&self) -> bool {
        self.comps.values().all(Coeff::is_zero)
    }

    /// All keys of the index space, in lexicographic order.
    pub fn all_keys(&self) -> Vec<Key> {
        let dims: Vec<usize> = self.slots.iter().map(|s| s.dim(self.n())).collect();
        let mut out = vec![Vec::new()];
        for d in dims {
            out = out
                .into_iter()
                .flat_map(|k| {
                    (0..d).map(move |v| {
                        let mut k2 = k.clone();
                        k2.push(v as u8);
                        k2
                    })
                })
                .collect();
        }
        out
    }

    fn assert_same_shape(&self, o: &Self) {
        assert_eq!(self.slots, o.slots, "slot mismatch");
        assert_eq!(self.weight, o.weight, "weight mismatch");
    }

    pub fn add(&self, o: &Self) -> Self {
        self.assert_same_shape(o);
        let mut r = self.clone();
        for (k, c) in &o.comps {
            r.add_at(k.clone(), c);
        }
        r.prune();
        r
    }

    pub fn scale_int(&self, v: i64) -> Self {
        self.scale(&ExactScalar::int(v))
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&ExactScalar::int(-1)))
    }

    pub fn scale(&self, s: &ExactScalar) -> Self {
        let mut r = self.zero_like();
        if s.is_zero() {
            return r;
        }
        r.comps = self.comps.iter().map(|(k, c)| (k.clone(), c.scale(s))).collect();
        r
    }

    /// Multiplication by a scalar polynomial of weight `dw`.
    pub fn mul_scalar(&self, p: &Poly, dw: &Weight) -> Self {
        let mut r = self.with_shape(&self.weight + dw, self.slots.clone());
        for (k, c) in &self.comps {
            r.set(k.clone(), c.mul_poly(p));
        }
        r
    }

    pub fn map(&self, f: impl Fn(&C) -> C) -> Self {
        let mut r = self.zero_like();
        for (k, c) in &self.comps {
            r.set(k.clone(), f(c));
        }
        r
    }

    /// Reorders slots: slot `i` of the result is slot `perm[i]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.slots.len());
        let slots = perm.iter().map(|&p| self.slots[p]).collect();
        let mut r = self.with_shape(self.weight.clone(), slots);
        for (k, c) in &self.comps {
            r.comps.insert(perm.iter().map(|&p| k[p]).collect(), c.clone());
        }
        r
    }

    /// Moves the last slot to position `pos`.
    pub fn move_last_to(&self, pos: usize) -> Self {
        let m = self.slots.len();
        let mut perm: Vec<usize> = (0..m - 1).collect();
        perm.insert(pos, m - 1);
        self.permute(&perm)
    }

    /// `self (x) p`: appends the slots of a polynomial field.
    pub fn outer(&self, p: &Field<Poly>) -> Self {
        let mut slots = self.slots.clone();
        slots.extend_from_slice(p.slots());
        let mut r = self.with_shape(&self.weight + &p.weight, slots);
        for (k1, c) in &self.comps {
            for (k2, q) in p.iter() {
                let mut k = k1.clone();
                k.extend_from_slice(k2);
                r.add_mul_at(k, q, c);
            }
        }
        r.prune();
        r
    }

    /// Contracts slots `i` and `j`, inserting the metric when they are not contragredient.
    pub fn contract(&self, i: usize, j: usize) -> Self {
        assert_ne!(i, j);
        let (si, sj) = (self.slots[i], self.slots[j]);
        let plain = sj == si.contragredient();
        assert!(plain || sj == si.metric_dual().contragredient(), "cannot contract {si:?} with {sj:?}");
        let mut weight = self.weight.clone();
        if !plain && !si.is_tractor() {
            let s = if si.is_upper() { 1 } else { -1 };
            weight = weight.shift(s, s);
        }
        let slots = self.slots.iter().enumerate().filter(|&(k, _)| k != i && k != j).map(|(_, s)| *s).collect();
        let mut r = self.with_shape(weight, slots);
        for (k, c) in &self.comps {
            let (vi, vj) = (k[i] as usize, k[j] as usize);
            let factor = if plain { (vi == vj).then_some(1) } else { metric_entry(si, vi, vj, &self.sig) };
            if let Some(f) = factor {
                let key = k.iter().enumerate().filter(|&(m, _)| m != i && m != j).map(|(_, v)| *v).collect();
                r.add_scaled_at(key, &ExactScalar::int(f), c);
            }
        }
        r.prune();
        r
    }

    /// Raises or lowers slot `i` with the metric.
    pub fn dualize(&self, i: usize) -> Self {
        let s = self.slots[i];
        let mut slots = self.slots.clone();
        slots[i] = s.metric_dual();
        let mut weight = self.weight.clone();
        if !s.is_tractor() {
            let d = if s.is_upper() { 1 } else { -1 };
            weight = weight.shift(d, d);
        }
        let mut r = self.with_shape(weight, slots);
        let n = self.n();
        for (k, c) in &self.comps {
            let v = k[i] as usize;
            let (v2, f) = if s.is_tractor() {
                if v == 0 {
                    (n + 1, 1)
                } else if v == n + 1 {
                    (0, 1)
                } else {
                    (v, self.sig.eps(v - 1))
                }
            } else {
                (v, self.sig.eps(v))
            };
            let mut key = k.clone();
            key[i] = v2 as u8;
            r.add_scaled_at(key, &ExactScalar::int(f), c);
        }
        r
    }
}

/// Entry of `h` (or its inverse) pairing slot kind `s` at `vi` with the conjugate kind at `vj`.
fn metric_entry(s: Slot, vi: usize, vj: usize, sig: &Signature) -> Option<i64> {
    let n = sig.n();
    if s.is_tractor() {
        match (vi, vj) {
            (0, b) if b == n + 1 => Some(1),
            (a, 0) if a == n + 1 => Some(1),
            (a, b) if a == b && a >= 1 && a <= n => Some(sig.eps(a - 1)),
            _ => None,
        }
    } else {
        (vi == vj).then(|| sig.eps(vi))
    }
}

impl Field<Poly> {
    /// Complex conjugate: conjugates components, slot kinds, and weight.
    pub fn conj(&self) -> Self {
        let slots = self.slots.iter().map(|s| s.conj()).collect();
        let mut r = self.with_shape(self.weight.swapped(), slots);
        for (k, c) in &self.comps {
            r.set(k.clone(), c.conj());
        }
        r
    }

    /// Field whose component at each key is `f(key)`.
    pub fn from_fn(sig: &Signature, weight: Weight, slots: Vec<Slot>, f: impl Fn(&[u8]) -> Poly) -> Self {
        let mut r = Self::zero(sig, weight, slots);
        for k in r.all_keys() {
            let c = f(&k);
            r.set(k, c);
        }
        r
    }
}

impl<C: Coeff> fmt::Debug for Field<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Field{}{:?} {{", self.weight, self.slots)?;
        for (k, c) in &self.comps {
            write!(f, " {k:?}: {c:?};")?;
        }
        write!(f, " }}")
    }
}
