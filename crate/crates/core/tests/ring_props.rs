use critlen_core::poly::Poly;
use critlen_core::trigpoly::{spherical_fn, TrigPoly};
use proptest::prelude::*;

fn trig_poly() -> impl Strategy<Value = TrigPoly> {
    let part = (0u32..4, prop::collection::vec(-5i64..=5, 0..4), prop::collection::vec(-5i64..=5, 0..4));
    prop::collection::vec(part, 0..4).prop_map(|parts| {
        parts.into_iter().fold(TrigPoly::zero(), |acc, (k, c, s)| {
            acc + TrigPoly::from_parts(k, Poly::from_i64s(&c), Poly::from_i64s(&s))
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_form_is_unique(a in trig_poly(), b in trig_poly()) {
        // a + b - b must come back as exactly the same representation
        prop_assert_eq!(&(&a + &b) - &b, a.clone());
        prop_assert!((&a - &a).is_zero());
        prop_assert_eq!(&a * &b, &b * &a);
    }

    #[test]
    fn product_rule(a in trig_poly(), b in trig_poly()) {
        let lhs = (&a * &b).diff();
        let rhs = &(&a.diff() * &b) + &(&a * &b.diff());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn derivative_is_linear(a in trig_poly(), b in trig_poly()) {
        prop_assert_eq!((&a + &b).diff(), &a.diff() + &b.diff());
    }

    #[test]
    fn evaluation_is_a_ring_map(a in trig_poly(), b in trig_poly(), x in 0.05f64..6.0) {
        let pa = a.eval(x).unwrap();
        let pb = b.eval(x).unwrap();
        let prod = (&a * &b).eval(x).unwrap();
        let scale = 1.0 + pa.abs() * pb.abs();
        prop_assert!((prod - pa * pb).abs() <= 1e-12 * scale);
    }

    #[test]
    fn spherical_recurrence(n in 1usize..8) {
        let f = spherical_fn(n).unwrap();
        let g = spherical_fn(n - 1).unwrap();
        prop_assert_eq!(f.diff(), &TrigPoly::x() * &g);
    }
}
