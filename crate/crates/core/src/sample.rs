//! Seeded random polynomials and fields for randomized identity checks.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::heisenberg::{Field, Signature, Slot, Weight};
use crate::scalars::{rat, ExactScalar, Mono, Poly, VarSet};

/// Deterministic generator used by every randomized check.
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn small(&mut self, lo: i64, hi: i64) -> i64 {
        self.rng.gen_range(lo..=hi)
    }

    /// Nonzero small Gaussian integer (or real integer when `real`).
    fn coeff(&mut self, real: bool) -> ExactScalar {
        loop {
            let re = self.small(-3, 3);
            let im = if real { 0 } else { self.small(-2, 2) };
            if re != 0 || im != 0 {
                return ExactScalar::new(rat(re, 1), rat(im, 1));
            }
        }
    }

    /// Random polynomial with `terms` terms of weighted degree at most `degree`,
    /// variable `i` counting `weights[i]` (all 1 when `weights` is empty).
    pub fn poly_weighted(&mut self, vars: &Arc<VarSet>, degree: u32, terms: usize, weights: &[u32], real_coeffs: bool) -> Poly {
        let nv = vars.len();
        let wt = |i: usize| weights.get(i).copied().unwrap_or(1);
        let mut p = Poly::zero(vars);
        for _ in 0..terms {
            let mut m = Mono::default();
            let mut budget = self.small(0, degree as i64) as u32;
            for _ in 0..3 * nv {
                let i = self.small(0, nv as i64 - 1) as usize;
                if wt(i) <= budget {
                    m.0[i] += 1;
                    budget -= wt(i);
                }
            }
            let c = self.coeff(real_coeffs);
            p.add_term(m, &c);
        }
        p
    }

    /// Random polynomial of total degree at most `degree`.
    pub fn poly(&mut self, vars: &Arc<VarSet>, degree: u32, terms: usize) -> Poly {
        self.poly_weighted(vars, degree, terms, &[], false)
    }

    /// Random real polynomial (invariant under conjugation).
    pub fn real_poly(&mut self, vars: &Arc<VarSet>, degree: u32, terms: usize) -> Poly {
        let p = self.poly(vars, degree, terms);
        &p + &p.conj()
    }

    /// Random field with every component drawn independently.
    pub fn field(&mut self, sig: &Signature, weight: Weight, slots: Vec<Slot>, degree: u32, terms: usize) -> Field<Poly> {
        let vars = VarSet::heisenberg(sig.n());
        let mut f = Field::zero(sig, weight, slots);
        for k in f.all_keys() {
            let c = self.poly(&vars, degree, terms);
            f.set(k, c);
        }
        f
    }

    /// Random `R_{a bbar c dbar}` of weight `(1,1)` with the Kahler-type symmetries
    /// `R_{abcd} = R_{cbad} = conj(R_{badc})`.
    pub fn curvature_tensor(&mut self, sig: &Signature, degree: u32, terms: usize) -> Field<Poly> {
        let x = self.field(sig, Weight::ints(1, 1), vec![Slot::Hol, Slot::Anti, Slot::Hol, Slot::Anti], degree, terms);
        let y = x.add(&x.permute(&[2, 1, 0, 3]));
        let z = y.add(&y.permute(&[0, 3, 2, 1]));
        let mut zc = z.clone();
        for k in z.all_keys() {
            zc.set(k.clone(), z.comp(&[k[1], k[0], k[3], k[2]]).conj());
        }
        z.add(&zc)
    }

    /// Random weight `(w, w')` with `w` in `(1/3) Z` and `w - w'` integral.
    pub fn weight(&mut self) -> Weight {
        let w = rat(self.small(-6, 6), 3);
        let d = rat(self.small(-3, 3), 1);
        Weight::new(w.clone(), w - d).expect("integral difference")
    }

    /// Random symmetric `A_ab` of weight `(0,0)`.
    pub fn symmetric_torsion(&mut self, sig: &Signature, degree: u32, terms: usize) -> Field<Poly> {
        let x = self.field(sig, Weight::zero(), vec![Slot::Hol, Slot::Hol], degree, terms);
        x.add(&x.permute(&[1, 0]))
    }
}
