use num_rational::BigRational;
use proptest::prelude::*;
use sawlab_core::series::SeriesTrunc;

fn series(n: usize) -> impl Strategy<Value = SeriesTrunc> {
    prop::collection::vec((-50i64..50, 1i64..6), n + 1).prop_map(|v| {
        SeriesTrunc::new(
            v.into_iter()
                .map(|(p, q)| BigRational::new(p.into(), q.into()))
                .collect(),
        )
    })
}

proptest! {
    #[test]
    fn product_is_convolution(a in series(6), b in series(6)) {
        let p = &a * &b;
        for k in 0..=6 {
            let mut want = BigRational::from_integer(0.into());
            for i in 0..=k {
                want += a.coeff(i) * b.coeff(k - i);
            }
            prop_assert_eq!(p.coeff(k), want);
        }
        prop_assert_eq!(&a * &b, &b * &a);
    }

    #[test]
    fn product_associates(a in series(5), b in series(5), c in series(5)) {
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
    }

    #[test]
    fn leibniz_rule(a in series(6), b in series(6)) {
        let lhs = (&a * &b).derivative();
        let rhs = &(&a.derivative() * &b.truncate(5)) + &(&a.truncate(5) * &b.derivative());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn evaluation_is_a_ring_map(a in series(4), b in series(4), p in -5i64..5, q in 1i64..5) {
        let z = BigRational::new(p.into(), q.into());
        // The product keeps orders <= 4 only; compare with the full product.
        let mut full = vec![BigRational::from_integer(0.into()); 9];
        for i in 0..=4 {
            for j in 0..=4 {
                full[i + j] += a.coeff(i) * b.coeff(j);
            }
        }
        prop_assert_eq!(SeriesTrunc::new(full).eval(&z), a.eval(&z) * b.eval(&z));
        prop_assert_eq!((&a + &b).eval(&z), a.eval(&z) + b.eval(&z));
    }
}
