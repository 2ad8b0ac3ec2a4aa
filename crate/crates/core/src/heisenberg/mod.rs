//! The Heisenberg group: frame `Z_a, Zbar_a, T`, weighted fields, and the flat connection.
//!
//! Coordinates are `z1..zn, zb1..zbn, t` with
//! `Z_a = d/dz_a + (i/2) eps_a zb_a d/dt`, `Zbar_a` its conjugate and `T = d/dt`,
//! so that `[Z_a, Zbar_b] = -i h_ab T` with `h = diag(eps)`.

mod field;
mod weight;

use std::sync::Arc;

pub use field::{Coeff, Field, Key, Slot, SlotShape};
pub use weight::{Signature, Weight};

use crate::scalars::{ExactScalar, Poly, VarSet};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HeisenbergError {
    #[error("invalid signature: {0}")]
    BadSignature(String),
    #[error("weight ({0},{1}) does not have w - w' integral")]
    NonIntegralWeight(String, String),
    #[error("frame self-check failed: {0}")]
    FrameCheck(String),
}

/// Direction of a covariant derivative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Dir {
    /// `nabla_a`, appends a [`Slot::Hol`] index.
    Hol,
    /// `nabla_abar`, appends a [`Slot::Anti`] index.
    Anti,
    /// `nabla_0`, lowers the weight by `(1,1)`.
    Zero,
}

impl Dir {
    pub fn conj(self) -> Dir {
        match self {
            Dir::Hol => Dir::Anti,
            Dir::Anti => Dir::Hol,
            Dir::Zero => Dir::Zero,
        }
    }
}

/// The left-invariant frame of the Heisenberg group for a given signature.
#[derive(Clone, Debug)]
pub struct Frame {
    sig: Signature,
    vars: Arc<VarSet>,
    /// `(i/2) eps_a zb_a`
    zcoef: Vec<Poly>,
    /// `-(i/2) eps_a z_a`
    zbcoef: Vec<Poly>,
}

impl Frame {
    pub fn new(sig: &Signature) -> Self {
        let n = sig.n();
        let vars = VarSet::heisenberg(n);
        let zcoef = (0..n).map(|a| Poly::var(&vars, n + a).scale(&ExactScalar::imag(sig.eps(a), 2))).collect();
        let zbcoef = (0..n).map(|a| Poly::var(&vars, a).scale(&ExactScalar::imag(-sig.eps(a), 2))).collect();
        Self { sig: sig.clone(), vars, zcoef, zbcoef }
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

    pub fn z_var(&self, a: usize) -> usize {
        a
    }

    pub fn zb_var(&self, a: usize) -> usize {
        self.n() + a
    }

    pub fn t_var(&self) -> usize {
        2 * self.n()
    }

    /// `f` composed with the left translation by `(a, s)`, under which the frame is invariant.
    pub fn translate(&self, f: &Poly, a: &[ExactScalar], s: &ExactScalar) -> Poly {
        let n = self.n();
        let mut images: Vec<Poly> = (0..2 * n).map(|i| Poly::var(&self.vars, i)).collect();
        let mut t = &Poly::var(&self.vars, self.t_var()) + &Poly::constant(&self.vars, s.clone());
        for (b, ab) in a.iter().enumerate() {
            images[b] = &images[b] + &Poly::constant(&self.vars, ab.clone());
            images[n + b] = &images[n + b] + &Poly::constant(&self.vars, ab.conj());
            let e = ExactScalar::imag(self.sig.eps(b), 2);
            let lin = &Poly::var(&self.vars, b).scale(&ab.conj()) - &Poly::var(&self.vars, n + b).scale(ab);
            t = &t + &lin.scale(&e);
        }
        images.push(t);
        f.compose(&images)
    }

    /// `Z_a c`.
    pub fn z<C: Coeff>(&self, a: usize, c: &C) -> C {
        let mut r = c.d(a);
        r.add_mul(&self.zcoef[a], &c.d(self.t_var()));
        r
    }

    /// `Zbar_a c`.
    pub fn zb<C: Coeff>(&self, a: usize, c: &C) -> C {
        let mut r = c.d(self.n() + a);
        r.add_mul(&self.zbcoef[a], &c.d(self.t_var()));
        r
    }

    /// `T c`.
    pub fn t<C: Coeff>(&self, c: &C) -> C {
        c.d(self.t_var())
    }

    /// Applies the frame derivative of direction `dir` and index `a` (ignored for `Zero`).
    pub fn apply<C: Coeff>(&self, dir: Dir, a: usize, c: &C) -> C {
        match dir {
            Dir::Hol => self.z(a, c),
            Dir::Anti => self.zb(a, c),
            Dir::Zero => self.t(c),
        }
    }

    /// Componentwise frame derivative of a field: the flat connection.
    pub fn derive<C: Coeff>(&self, f: &Field<C>, dir: Dir) -> Field<C> {
        let n = self.n();
        match dir {
            Dir::Zero => {
                let mut r = f.with_shape(f.weight.shift(-1, -1), f.slots().to_vec());
                for (k, c) in f.iter() {
                    r.set(k.clone(), self.t(c));
                }
                r
            }
            Dir::Hol | Dir::Anti => {
                let mut slots = f.slots().to_vec();
                slots.push(if dir == Dir::Hol { Slot::Hol } else { Slot::Anti });
                let mut r = f.with_shape(f.weight.clone(), slots);
                for (k, c) in f.iter() {
                    for a in 0..n {
                        let mut key = k.clone();
                        key.push(a as u8);
                        r.set(key, self.apply(dir, a, c));
                    }
                }
                r
            }
        }
    }

    /// Verifies `[Z_a, Zbar_b] = -i h_ab T` on the coordinate functions,
    /// which determine a first-order operator without constant term.
    pub fn self_check(&self) -> Result<(), HeisenbergError> {
        let n = self.n();
        for a in 0..n {
            for b in 0..n {
                for v in 0..=2 * n {
                    let x = Poly::var(&self.vars, v);
                    let lhs = &self.z(a, &self.zb(b, &x)) - &self.zb(b, &self.z(a, &x));
                    let h = if a == b { self.sig.eps(a) } else { 0 };
                    let rhs = self.t(&x).scale(&ExactScalar::imag(-h, 1));
                    if lhs != rhs {
                        return Err(HeisenbergError::FrameCheck(format!(
                            "[Z_{a}, Zbar_{b}] on {} gives {lhs}, expected {rhs}",
                            self.vars.name(v)
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::parse_poly;

    #[test]
    fn frame_commutator_convention() {
        for s in ["+", "-", "++", "+-", "+-+"] {
            Frame::new(&Signature::parse(s).unwrap()).self_check().unwrap();
        }
    }

    #[test]
    fn holomorphic_frame_fields_commute() {
        let fr = Frame::new(&Signature::parse("+-").unwrap());
        let p = parse_poly("z1^2*zb2*t + zb1*zb2*t^2 - i*z2*t^3", fr.vars()).unwrap();
        assert_eq!(fr.z(0, &fr.z(1, &p)), fr.z(1, &fr.z(0, &p)));
        assert_eq!(fr.zb(0, &fr.zb(1, &p)), fr.zb(1, &fr.zb(0, &p)));
    }

    #[test]
    fn frame_is_translation_invariant() {
        let fr = Frame::new(&Signature::parse("+-").unwrap());
        let p = parse_poly("z1^2*zb2*t + (2+i)*zb1*t^2 + z2*zb2", fr.vars()).unwrap();
        let a = [ExactScalar::new(crate::scalars::rat(1, 1), crate::scalars::rat(2, 1)), ExactScalar::frac(-1, 3)];
        let s = ExactScalar::frac(5, 2);
        for b in 0..2 {
            assert_eq!(fr.z(b, &fr.translate(&p, &a, &s)), fr.translate(&fr.z(b, &p), &a, &s));
            assert_eq!(fr.zb(b, &fr.translate(&p, &a, &s)), fr.translate(&fr.zb(b, &p), &a, &s));
        }
    }

    #[test]
    fn conjugate_frame() {
        let fr = Frame::new(&Signature::parse("+-").unwrap());
        let p = parse_poly("z1^2*zb2*t + (2+i)*zb1*t^2", fr.vars()).unwrap();
        for a in 0..2 {
            assert_eq!(fr.zb(a, &p.conj()), fr.z(a, &p).conj());
        }
    }

    #[test]
    fn contraction_with_metric() {
        let sig = Signature::parse("+-").unwrap();
        let fr = Frame::new(&sig);
        let v = fr.vars().clone();
        let f = Field::from_fn(&sig, Weight::zero(), vec![Slot::Hol, Slot::Anti], |k| {
            Poly::constant(&v, ExactScalar::int(1 + k[0] as i64 + 3 * k[1] as i64))
        });
        let tr = f.contract(0, 1);
        assert_eq!(tr.weight, Weight::ints(-1, -1));
        assert_eq!(tr.value(), Poly::constant(&v, ExactScalar::int(1 - 5)));
    }
}
