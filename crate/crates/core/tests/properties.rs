use std::sync::Arc;

use proptest::prelude::*;

use crtractor::heisenberg::Weight;
use crtractor::invariant_ops::{hermitian_dual, Operator};
use crtractor::sample::Sampler;
use crtractor::scalars::{gcd, rat, ExactScalar, Mono, Poly, RatFunc, VarSet};

fn scalar() -> impl Strategy<Value = ExactScalar> {
    (-20i64..20, 1i64..6, -20i64..20, 1i64..6).prop_map(|(a, b, c, d)| ExactScalar::new(rat(a, b), rat(c, d)))
}

fn vars() -> Arc<VarSet> {
    VarSet::heisenberg(1)
}

fn poly(seed: u64, degree: u32) -> Poly {
    Sampler::new(seed).poly(&vars(), degree, 3)
}

fn operator(seed: u64) -> Operator {
    let v = vars();
    let mut s = Sampler::new(seed);
    let terms = [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 0]].iter().map(|e| (Mono::from_slice(e), s.poly(&v, 1, 2))).collect::<Vec<_>>();
    Operator::from_terms(&v, terms)
}

proptest! {
    #[test]
    fn scalar_ring_axioms(a in scalar(), b in scalar(), c in scalar()) {
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        if a != ExactScalar::int(0) {
            prop_assert_eq!(&(&b / &a) * &a, b);
        }
    }

    #[test]
    fn conjugation_is_an_involutive_ring_map(a in scalar(), b in scalar(), s1 in any::<u64>(), s2 in any::<u64>()) {
        prop_assert_eq!((&a * &b).conj(), &a.conj() * &b.conj());
        let (p, q) = (poly(s1, 3), poly(s2, 3));
        prop_assert_eq!(p.conj().conj(), p.clone());
        prop_assert_eq!((&p * &q).conj(), &p.conj() * &q.conj());
        prop_assert!((&p + &p.conj()).is_real());
    }

    #[test]
    fn gcd_divides_both(s1 in any::<u64>(), s2 in any::<u64>(), s3 in any::<u64>()) {
        let g0 = poly(s3, 2);
        let a = &poly(s1, 2) * &g0;
        let b = &poly(s2, 2) * &g0;
        let g = gcd(&a, &b);
        prop_assume!(!g.is_zero());
        prop_assert!(a.exact_div(&g).is_ok());
        prop_assert!(b.exact_div(&g).is_ok());
        if !g0.is_zero() {
            prop_assert!(g.exact_div(&gcd(&g0, &g0)).is_ok());
        }
    }

    #[test]
    fn rational_functions_cancel(s1 in any::<u64>(), s2 in any::<u64>()) {
        let (p, q) = (poly(s1, 2), poly(s2, 2));
        prop_assume!(!q.is_zero());
        let f = RatFunc::new(&p * &q, q.clone()).unwrap();
        prop_assert_eq!(f.as_poly(), Some(p));
    }

    #[test]
    fn operator_composition_is_associative(s1 in any::<u64>(), s2 in any::<u64>(), s3 in any::<u64>(), s4 in any::<u64>()) {
        let (a, b, c) = (operator(s1), operator(s2), operator(s3));
        prop_assert_eq!(a.compose(&b).compose(&c), a.compose(&b.compose(&c)));
        let f = poly(s4, 4);
        prop_assert_eq!(a.compose(&b).apply(&f), a.apply(&b.apply(&f)));
    }

    #[test]
    fn adjoint_is_involutive(s1 in any::<u64>(), s2 in any::<u64>()) {
        let (a, b) = (operator(s1), operator(s2));
        prop_assert_eq!(a.adjoint().adjoint(), a.clone());
        prop_assert_eq!(a.compose(&b).adjoint(), b.adjoint().compose(&a.adjoint()));
    }

    #[test]
    fn hermitian_dual_is_involutive(w in -6i64..6, d in -4i64..4, n in 1usize..3) {
        let wt = Weight::new(rat(w, 2), rat(w, 2) - rat(d, 1)).unwrap();
        prop_assert_eq!(hermitian_dual(&hermitian_dual(&wt, n), n), wt);
    }
}
