use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use sawlab_core::lattice::LatticeSpec;
use sawlab_core::series::*;
use sawlab_core::walks::{count_saws, list_saws, EngineConfig};
use statrs::function::gamma::gamma;

fn r(s: &str) -> BigRational {
    s.parse().unwrap()
}

fn cfg() -> EngineConfig {
    EngineConfig::default()
}

fn ints(s: &SeriesTrunc) -> Vec<i64> {
    s.coeffs.iter().map(|c| c.to_integer().to_i64().unwrap()).collect()
}

#[test]
fn ode_identity_z2_and_z3() {
    assert!(susceptibility_ode_check(&LatticeSpec::nearest(2), 9, &cfg()).unwrap().holds);
    assert!(susceptibility_ode_check(&LatticeSpec::nearest(3), 7, &cfg()).unwrap().holds);
}

#[test]
fn ode_check_detects_wrong_pi() {
    let spec = LatticeSpec::nearest(2);
    let chi = susceptibility_series(&spec, &BigRational::one(), 6, &cfg()).unwrap();
    let mut pi = SeriesTrunc::from_integers(&[0, 0, -4, 4, -12, 28, -68]);
    assert!(ode_report(&chi, &pi).holds);
    pi.coeffs[4] = r("-11");
    assert!(!ode_report(&chi, &pi).holds);
}

#[test]
fn bubble_second_coefficient() {
    let b = bubble_series(&LatticeSpec::nearest(2), 2, &cfg()).unwrap();
    assert_eq!(ints(&b), vec![1, 0, 4]);
    let b3 = bubble_series(&LatticeSpec::nearest(3), 7, &cfg()).unwrap();
    assert!(b3.coeffs.iter().skip(1).step_by(2).all(|c| c.is_zero()));
}

#[test]
fn chi_dominates_bridge_growth() {
    for n in 1..=12 {
        let rep = chi_lower_bound_check(&LatticeSpec::nearest(2), n, &cfg()).unwrap();
        assert!(rep.violations.is_empty(), "{rep:?}");
    }
}

#[test]
fn one_dimensional_closed_form() {
    let spec = LatticeSpec::nearest(1);
    let t = count_saws(&spec, 12, true, &cfg()).unwrap();
    for x in -13..=13 {
        let g = two_point_series(&t.by_endpoint, &[x]);
        for n in 0..=12 {
            let want = if x.unsigned_abs() as usize == n { 1 } else { 0 };
            assert_eq!(g.coeff(n), BigRational::from_integer(want.into()), "x={x} n={n}");
        }
    }
    for (z, k) in [("1/2", "1/3"), ("3/10", "7/9"), ("9/10", "1/8")] {
        let f = fourier_two_point(&spec, &r(z), &[r(k)], 60, 53, &cfg()).unwrap();
        let (zf, kf) = (r(z).to_f64().unwrap(), r(k).to_f64().unwrap() * std::f64::consts::PI);
        let exact = (1.0 - zf * zf) / (1.0 + zf * zf - 2.0 * zf * kf.cos());
        assert!((f.value_f64 - exact).abs() <= f.tail_bound + 1e-12, "{z} {k}: {f:?}");
        assert!(f.reciprocal.holds);
    }
}

#[test]
fn zero_wave_vector_is_susceptibility() {
    let spec = LatticeSpec::nearest(2);
    let z = r("1/5");
    let chi = susceptibility_series(&spec, &BigRational::one(), 9, &cfg()).unwrap();
    let exact = chi.eval(&z).to_f64().unwrap();
    for bits in [53, 128] {
        let f = fourier_two_point(&spec, &z, &[r("0"), r("0")], 9, bits, &cfg()).unwrap();
        assert!((f.value_f64 - exact).abs() < 1e-14, "{bits}: {f:?}");
        assert!(f.imag_f64.abs() < 1e-14);
    }
}

#[test]
fn direct_lattice_sum_oracle() {
    let spec = LatticeSpec::nearest(2);
    let n_max = 8;
    // At k = (π, π) the phase e^{ik·x} is exactly (-1)^{x_1 + x_2}.
    let z = r("1/10");
    let mut exact = BigRational::zero();
    for n in 0..=n_max {
        for w in list_saws(&spec, n, false).unwrap() {
            let end = w.last().unwrap();
            let sign = if (end[0] + end[1]).rem_euclid(2) == 0 { 1 } else { -1 };
            exact += num_traits::pow(z.clone(), n) * BigRational::from_integer(sign.into());
        }
    }
    let direct = exact.to_f64().unwrap();
    let f = fourier_two_point(&spec, &r("1/10"), &[r("1"), r("1")], n_max, 128, &cfg()).unwrap();
    assert!((f.value_f64 - direct).abs() < 1e-15, "{} {direct}", f.value_f64);
    let wide = fourier_two_point(&spec, &r("1/10"), &[r("1"), r("1")], 12, 128, &cfg()).unwrap();
    assert!((wide.value_f64 - direct).abs() <= f.tail_bound);
    assert!(f.reciprocal.holds && f.imag_f64.abs() < 1e-30);
}

#[test]
fn reciprocal_identity_three_dimensions() {
    let f = fourier_two_point(
        &LatticeSpec::nearest(3),
        &r("1/7"),
        &[r("1/2"), r("1/3"), r("0")],
        7,
        106,
        &cfg(),
    )
    .unwrap();
    assert!(f.reciprocal.holds, "{f:?}");
}

#[test]
fn srw_integrals() {
    assert_eq!(srw_reference(1, SrwTask::ReturnIntegral).unwrap(), SrwValue::Divergent);
    assert_eq!(srw_reference(2, SrwTask::ReturnIntegral).unwrap(), SrwValue::Divergent);
    assert_eq!(srw_reference(2, SrwTask::GreenValue).unwrap(), SrwValue::Divergent);
    assert_eq!(srw_reference(4, SrwTask::IntersectionIntegral).unwrap(), SrwValue::Divergent);
    // Closed form for the simple cubic lattice.
    let watson = 6f64.sqrt() / (32.0 * std::f64::consts::PI.powi(3))
        * gamma(1.0 / 24.0)
        * gamma(5.0 / 24.0)
        * gamma(7.0 / 24.0)
        * gamma(11.0 / 24.0);
    let SrwValue::Value { value, error } = srw_reference(3, SrwTask::ReturnIntegral).unwrap() else {
        panic!()
    };
    assert!((value - watson).abs() < 1e-12, "{value} {watson}");
    assert!((value - 1.5163860).abs() < 1e-7 && error < 1e-10);
    let SrwValue::Value { value: g, error: ge } = srw_reference(3, SrwTask::GreenValue).unwrap() else {
        panic!()
    };
    assert!((g - watson).abs() <= ge);
    let SrwValue::Value { value: r4, .. } = srw_reference(4, SrwTask::ReturnIntegral).unwrap() else {
        panic!()
    };
    let SrwValue::Value { value: g4, error: e4 } = srw_reference(4, SrwTask::GreenValue).unwrap() else {
        panic!()
    };
    assert!((r4 - g4).abs() <= e4);
    let SrwValue::Value { value: b5, .. } = srw_reference(5, SrwTask::IntersectionIntegral).unwrap() else {
        panic!()
    };
    let SrwValue::Value { value: r5, .. } = srw_reference(5, SrwTask::ReturnIntegral).unwrap() else {
        panic!()
    };
    // Jensen: E[X^2] >= E[X]^2 for X = 1/(1 - D̂) under the uniform measure.
    assert!(b5 >= r5 * r5 && b5.is_finite());
}

#[test]
fn simon_lieb_single_site() {
    let spec = LatticeSpec::nearest(2);
    let rep = simon_lieb_check(&spec, &BigRational::one(), 0, &[0, 0], &[0, 0], 2, &cfg()).unwrap();
    assert_eq!(rep.lhs[2], "0");
    assert!(rep.holds);
}

#[test]
fn simon_lieb_box() {
    let spec = LatticeSpec::nearest(2);
    for lambda in ["1", "1/2", "0"] {
        for y in [[0, 0], [1, 1], [2, 0], [3, -1]] {
            let rep = simon_lieb_check(&spec, &r(lambda), 1, &[0, 0], &y, 8, &cfg()).unwrap();
            assert!(rep.holds, "λ={lambda} y={y:?}: {rep:?}");
        }
    }
}

#[test]
fn simon_lieb_target_outside() {
    let spec = LatticeSpec::nearest(2);
    let rep = simon_lieb_check(&spec, &BigRational::one(), 1, &[0, 0], &[2, 1], 7, &cfg()).unwrap();
    assert!(rep.restricted.iter().all(|c| c == "0"));
    assert!(rep.holds);
}

#[test]
fn diagrammatic_bounds_at_zero() {
    let rep = diagrammatic_bound_check(&LatticeSpec::nearest(2), &r("0"), 6, &cfg()).unwrap();
    for c in &rep.checks {
        assert_eq!(c.lhs.upper, 0.0);
        assert_eq!(c.rhs.lower, 0.0);
        assert_eq!(c.verdict, Verdict::Holds);
    }
}

#[test]
fn diagrammatic_bounds_z2() {
    let rep = diagrammatic_bound_check(&LatticeSpec::nearest(2), &r("1/8"), 10, &cfg()).unwrap();
    let n1 = &rep.checks[0];
    // Σ_y z H(y) = z|Ω| H(e1) by symmetry: the N = 1 bound is an equality.
    assert!(n1.truncated_margin.abs() < 1e-15);
    assert_ne!(n1.verdict, Verdict::Violated);
    let n2 = &rep.checks[1];
    assert_eq!(n2.verdict, Verdict::Holds, "{n2:?}");
    assert!(n2.rhs.lower - n2.lhs.upper > 0.0);
    assert!(rep.cos_identity_zero);
}

#[test]
fn diagrammatic_guard() {
    let err = diagrammatic_bound_check(&LatticeSpec::nearest(2), &r("1/3"), 4, &cfg());
    assert!(matches!(err, Err(SeriesError::OutsideGuard(_))));
}

#[test]
fn torus_susceptibility_dominated() {
    for (spec, sides) in [
        (LatticeSpec::nearest(2), vec![3, 5]),
        (LatticeSpec::nearest(3), vec![3]),
        (LatticeSpec::ZdSpreadOut { dim: 1, range: 2 }, vec![5, 7]),
    ] {
        let n = 8;
        let c = count_saws(&spec, n, false, &cfg()).unwrap().totals;
        for side in sides {
            let t = torus_counts(&spec, side, n).unwrap();
            assert!(t.iter().zip(&c).all(|(a, b)| a <= b), "{spec} side {side}");
            assert_eq!(t[1], c[1]);
        }
    }
    let tiny = torus_counts(&LatticeSpec::nearest(2), 3, 9).unwrap();
    assert_eq!(tiny[9], BigUint::zero());
}
