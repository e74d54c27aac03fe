use num_complex::Complex;
use num_rational::BigRational;
use proptest::prelude::*;
use sawlab_core::superint::*;

const M: usize = 3;

fn coeff() -> impl Strategy<Value = Cq> {
    (-5i64..=5, -5i64..=5).prop_map(|(a, b)| Complex::new(BigRational::from_integer(a.into()), BigRational::from_integer(b.into())))
}

fn term(parity: Option<u32>) -> impl Strategy<Value = (u32, Monomial, Cq)> {
    (0u32..1 << (2 * M), proptest::collection::vec(0u8..=1, 2 * M), coeff())
        .prop_filter("parity", move |(mask, _, _)| parity.is_none_or(|p| mask.count_ones() % 2 == p))
}

fn form(parity: Option<u32>) -> impl Strategy<Value = Form<Cq>> {
    proptest::collection::vec(term(parity), 0..5).prop_map(|ts| {
        let mut f = Form::zero(M);
        for (mask, mono, c) in ts {
            f.add_term(mask, mono, c);
        }
        f
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn odd_forms_anticommute(f in form(Some(1)), g in form(Some(1))) {
        let minus = Complex::new(BigRational::from_integer((-1).into()), BigRational::from_integer(0.into()));
        prop_assert_eq!(f.mul(&g), g.mul(&f).scale(&minus));
    }

    #[test]
    fn even_forms_commute(f in form(Some(0)), g in form(None)) {
        prop_assert!(f.is_even());
        prop_assert_eq!(f.mul(&g), g.mul(&f));
    }

    #[test]
    fn product_is_associative(f in form(None), g in form(None), h in form(None)) {
        prop_assert_eq!(f.mul(&g).mul(&h), f.mul(&g.mul(&h)));
    }

    #[test]
    fn fermion_degree_bounded(f in form(None), g in form(None)) {
        prop_assert!(f.mul(&g).fermion_degree() <= 2 * M as u32);
    }

    #[test]
    fn superexpectation_is_linear(f in form(None), g in form(None), k in coeff(), seed in 0u64..50) {
        let gauss = Gaussian::from_covariance(&random_covariance_exact(M, seed, 32)).unwrap();
        let lhs = gauss.superexpectation(&f.add(&g.scale(&k)));
        let rhs = gauss.superexpectation(&f) + gauss.superexpectation(&g) * k;
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn integration_by_parts(f in form(None), a in 0..M, seed in 0u64..50) {
        let gauss = Gaussian::from_covariance(&random_covariance_exact(M, seed, 32)).unwrap();
        let r = integration_by_parts_check(&gauss, a, &f, 0.0).unwrap();
        prop_assert!(r.holds, "{:?}", r);
    }
}
