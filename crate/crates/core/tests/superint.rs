use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sawlab_core::superint::*;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn cq(re: BigRational, im: BigRational) -> Cq {
    Complex::new(re, im)
}

/// Leibniz expansion, independent of elimination.
fn det_leibniz(a: &Matrix<Cq>) -> Cq {
    fn go(a: &Matrix<Cq>, row: usize, used: &mut Vec<bool>, inversions: usize, cols: &mut Vec<usize>) -> Cq {
        let n = a.n;
        if row == n {
            let p = cols.iter().enumerate().fold(Cq::one(), |acc, (i, &j)| acc * a.get(i, j).clone());
            return if inversions % 2 == 1 { -p } else { p };
        }
        let mut total = Cq::zero();
        for j in 0..n {
            if used[j] {
                continue;
            }
            let inv = cols.iter().filter(|&&k| k > j).count();
            used[j] = true;
            cols.push(j);
            total = total + go(a, row + 1, used, inversions + inv, cols);
            cols.pop();
            used[j] = false;
        }
        total
    }
    go(a, 0, &mut vec![false; a.n], 0, &mut Vec::new())
}

fn factorial(n: usize) -> BigRational {
    (1..=n as i64).fold(BigRational::one(), |acc, k| acc * q(k, 1))
}

#[test]
fn top_degree_is_determinant() {
    for m in 1..=6 {
        let c = random_covariance_exact(m, 100 + m as u64, 32);
        let (a, det) = c.inverse_det().unwrap();
        let (_, det_a) = a.inverse_det().unwrap();
        assert_eq!(det_leibniz(&c), det);
        let quad = fermion_quadratic(&a);
        let power = (1..m).fold(quad.clone(), |p, _| p.mul(&quad));
        let want = det_leibniz(&a) * Complex::new(factorial(m), BigRational::zero());
        // Canonical order ψ_1ψ̄_1…; relative to ψ̄_1ψ_1… the sign is (-1)^M.
        assert_eq!(power.top_coefficient(), want, "M = {m}");
        assert_eq!(det_a, det_leibniz(&a));
        let reordered = (0..m).fold(Form::<Cq>::one(m), |f, x| f.mul(&Form::psibar(m, x)).mul(&Form::psi(m, x)));
        let sign = if m % 2 == 1 { -Cq::one() } else { Cq::one() };
        assert_eq!(reordered.top_coefficient(), sign);
    }
}

#[test]
fn normalisation_exact_and_float() {
    for m in 1..=5 {
        let c = random_covariance_exact(m, m as u64, 64);
        let g = Gaussian::from_covariance(&c).unwrap();
        assert_eq!(g.superexpectation(&Form::one(m)), Cq::one());
    }
    for m in 1..=7 {
        let g = Gaussian::from_covariance(&random_covariance(m, 7 + m as u64)).unwrap();
        let z = g.superexpectation(&Form::one(m));
        assert!((z - Cf::one()).norm() < 1e-12, "M = {m}: {z}");
    }
}

#[test]
fn single_site_by_hand() {
    // A = (a): e^{-ψAψ̄} = 1 - a ψψ̄, top coefficient -a, ∫ = (-1/a)(-a)E[f].
    let c = Matrix::from_fn(1, |_, _| cq(q(2, 5), q(1, 7)));
    let g = Gaussian::from_covariance(&c).unwrap();
    let f = Form::phibar(1, 0).mul(&Form::phi(1, 0));
    assert_eq!(g.superexpectation(&f), c.get(0, 0).clone());
    // E[(φ̄φ)^2] = 2 C^2.
    let c00 = c.get(0, 0).clone();
    assert_eq!(g.superexpectation(&f.mul(&f)), c00.clone() * c00 * cq(q(2, 1), q(0, 1)));
    // ψψ̄ alone integrates against the boson normalisation: ∫ e^{-S} ψψ̄ = -1/a = -C.
    let p = Form::psi(1, 0).mul(&Form::psibar(1, 0));
    assert_eq!(g.superexpectation(&p), -c.get(0, 0).clone());
}

#[test]
fn wick_two_point_and_permanents() {
    let c = random_covariance_exact(4, 5, 64);
    let g = Gaussian::from_covariance(&c).unwrap();
    for a in 0..4 {
        for b in 0..4 {
            let f = Form::phibar(4, a).mul(&Form::phi(4, b));
            assert_eq!(g.superexpectation(&f), c.get(a, b).clone());
        }
    }
    let f = Form::phibar(4, 0)
        .mul(&Form::phi(4, 1))
        .mul(&Form::phibar(4, 2))
        .mul(&Form::phi(4, 3));
    let want = c.get(0, 1).clone() * c.get(2, 3).clone() + c.get(0, 3).clone() * c.get(2, 1).clone();
    assert_eq!(g.superexpectation(&f), want);
    assert_eq!(wick_permanent(&c, &[0, 2], &[1, 3]).unwrap(), want);
    assert_eq!(wick_permanent(&c, &[0, 0], &[1, 3]), Err(SuperError::DuplicateIndex));
    assert_eq!(wick_permanent(&c, &[0], &[1, 3]), Err(SuperError::Dimension));
    assert_eq!(wick_permanent(&c, &[9], &[1]), Err(SuperError::IndexOutOfRange(9)));
    // Unbalanced monomials vanish.
    assert!(g.superexpectation(&Form::phi(4, 0)).is_zero());
}

#[test]
fn ryser_matches_naive_up_to_six() {
    let c = random_covariance(6, 3);
    for k in 1..=6 {
        let rows: Vec<Vec<Cf>> = (0..k).map(|i| (0..k).map(|j| *c.get(i, 5 - j)).collect()).collect();
        let d = permanent_ryser(&rows) - permanent_naive(&rows);
        assert!(d.norm() < 1e-12, "k = {k}");
    }
}

#[test]
fn functions_of_tau_integrate_to_their_constant_term() {
    let m = 4;
    let c = random_covariance_exact(m, 21, 64);
    let g = Gaussian::from_covariance(&c).unwrap();
    let tau: Vec<Form<Cq>> = (0..m).map(|x| Form::tau(m, x)).collect();
    let k = cq(q(3, 2), q(-1, 3));
    // F = k + τ_0 τ_1 - 2 τ_2^2 + τ_0 τ_1 τ_2 τ_3 + (1 + τ_3)^3.
    let one = Form::<Cq>::one(m);
    let cube = one.add(&tau[3]).mul(&one.add(&tau[3])).mul(&one.add(&tau[3]));
    let f = Form::constant(m, k.clone())
        .add(&tau[0].mul(&tau[1]))
        .sub(&tau[2].mul(&tau[2]).scale(&cq(q(2, 1), q(0, 1))))
        .add(&tau[0].mul(&tau[1]).mul(&tau[2]).mul(&tau[3]))
        .add(&cube);
    assert_eq!(g.superexpectation(&f), k + Cq::one());
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for seed in 0..10 {
        let (f, f0) = random_tau_polynomial(m, 4, &mut rng);
        let g = Gaussian::from_covariance(&random_covariance_exact(m, seed, 64)).unwrap();
        assert_eq!(g.superexpectation(&f), f0);
    }
}

#[test]
fn integration_by_parts_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for m in 1..=4 {
        let c = random_covariance_exact(m, 40 + m as u64, 64);
        let g = Gaussian::from_covariance(&c).unwrap();
        for _ in 0..4 {
            let f = random_form(m, 6, &mut rng);
            for a in 0..m {
                let r = integration_by_parts_check(&g, a, &f, 0.0).unwrap();
                assert!(r.holds, "M = {m}, a = {a}: {r:?}");
            }
        }
    }
}

#[test]
fn saw_representation_by_hand_and_exact() {
    let c = random_covariance_exact(3, 9, 64);
    let g = Gaussian::from_covariance(&c).unwrap();
    let want = c.get(0, 1).clone() + c.get(0, 2).clone() * c.get(2, 1).clone();
    assert_eq!(saw_sum(&c, 0, 1, &[2]), want);
    let r = saw_representation_check(&g, 0, 1, DEFAULT_CAP, 0.0).unwrap();
    assert!(r.holds, "{r:?}");
    for m in 2..=5 {
        let c = random_covariance_exact(m, 60 + m as u64, 64);
        let g = Gaussian::from_covariance(&c).unwrap();
        for (a, b) in [(0, m - 1), (1, 0), (0, 0)] {
            let r = saw_representation_check(&g, a, b, DEFAULT_CAP, 0.0).unwrap();
            assert!(r.holds, "M = {m}, ({a}, {b}): {r:?}");
        }
    }
}

#[test]
fn saw_representation_float_at_cap() {
    let g = Gaussian::from_covariance(&random_covariance(7, 1)).unwrap();
    let r = saw_representation_check(&g, 0, 6, DEFAULT_CAP, 1e-10).unwrap();
    assert!(r.holds, "{r:?}");
    let big = Gaussian::from_covariance(&random_covariance(8, 1)).unwrap();
    assert_eq!(
        saw_representation_check(&big, 0, 1, DEFAULT_CAP, 1e-10).unwrap_err(),
        SuperError::CapExceeded { m: 8, cap: 7 }
    );
}

#[test]
fn loop_model_identity_and_excess() {
    for m in 2..=5 {
        let c = random_covariance_exact(m, 80 + m as u64, 64);
        let x: Vec<usize> = (2..m).collect();
        let r = loop_model_expansion(&c, 0, 1, &x, DEFAULT_CAP, 0.0).unwrap();
        assert!(r.holds, "M = {m}: {r:?}");
        let (loops, _) = loop_model_values(&c, 0, 1, &x, DEFAULT_CAP).unwrap();
        let saw = saw_sum(&c, 0, 1, &x);
        if m >= 3 {
            assert_ne!(loops, saw, "loops must contribute for M = {m}");
        } else {
            assert_eq!(loops, saw);
        }
    }
    let c = random_covariance_exact(3, 1, 64);
    let (w, k) = loop_model_values(&c, 0, 1, &[2], DEFAULT_CAP).unwrap();
    let want = c.get(0, 1).clone() * (Cq::one() + c.get(2, 2).clone()) + c.get(0, 2).clone() * c.get(2, 1).clone();
    assert_eq!(w, want);
    assert_eq!(k, want);
    let (w, k) = loop_model_values(&c, 0, 1, &[], DEFAULT_CAP).unwrap();
    assert_eq!((w, k), (c.get(0, 1).clone(), c.get(0, 1).clone()));
    assert_eq!(loop_model_values(&c, 0, 1, &[1], 7).unwrap_err(), SuperError::Dimension);
}

#[test]
fn rejects_covariance_without_positive_part() {
    let c = Matrix::from_fn(2, |i, j| {
        if i == j {
            cq(q(-1, 1), q(0, 1))
        } else {
            Cq::zero()
        }
    });
    assert_eq!(Gaussian::from_covariance(&c).unwrap_err(), SuperError::NotPositive);
    for seed in 0..20 {
        assert!(random_covariance(5, seed).has_positive_hermitian_part());
        assert!(random_covariance_exact(5, seed, 64).has_positive_hermitian_part());
    }
}

#[test]
fn random_covariance_is_deterministic() {
    assert_eq!(random_covariance(4, 3), random_covariance(4, 3));
    assert_ne!(random_covariance(4, 3), random_covariance(4, 4));
}
