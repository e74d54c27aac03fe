//! Gaussian superintegrals over a finite Grassmann algebra.
//!
//! Generators are ordered `ψ_1 < ψ̄_1 < ψ_2 < ψ̄_2 < ...`; generator `2x` is
//! `ψ_x` and `2x + 1` is `ψ̄_x`. A term of a form is a coefficient times a boson
//! monomial `Π φ_x^{a_x} φ̄_x^{b_x}` times the canonically ordered product of the
//! fermion generators in a bitmask.
//!
//! With `ψ_x ψ̄_x = -(1/π) du_x dv_x` and `∫ e^{-φAφ̄} du dv = π^M / det A`,
//! `∫ e^{-S_A} F = ((-1)^M / det A) Σ E_C[f] [ψ_1ψ̄_1⋯ψ_Mψ̄_M](e^{-ψAψ̄} ω)`
//! summed over the terms `f ω` of `F`.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::ops::Neg;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

pub const DEFAULT_CAP: usize = 7;
/// Largest `M` the bitmask representation supports.
pub const MAX_SITES: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SuperError {
    #[error("matrix is singular")]
    Singular,
    #[error("covariance does not have positive Hermitian part")]
    NotPositive,
    #[error("index lists must hold distinct entries")]
    DuplicateIndex,
    #[error("index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("M = {m} exceeds the cap {cap}")]
    CapExceeded { m: usize, cap: usize },
    #[error("dimension mismatch")]
    Dimension,
    #[error("permanent evaluations disagree")]
    Inconsistent,
}

pub type Cf = Complex<f64>;
pub type Cq = Complex<BigRational>;

pub trait Scalar: Clone + Debug + PartialEq + Num + Neg<Output = Self> {
    fn conj(&self) -> Self;
    /// Modulus, for pivoting and residuals.
    fn mag(&self) -> f64;
    fn from_rational(r: &BigRational) -> Self;
    fn from_cq(z: &Cq) -> Self;
    fn to_cf(&self) -> Cf;
    /// Real part strictly positive.
    fn re_positive(&self) -> bool;
    fn render(&self) -> String;
}

impl Scalar for Cf {
    fn conj(&self) -> Self {
        Complex::conj(self)
    }
    fn mag(&self) -> f64 {
        self.norm()
    }
    fn from_rational(r: &BigRational) -> Self {
        Complex::new(r.to_f64().unwrap_or(f64::NAN), 0.0)
    }
    fn from_cq(z: &Cq) -> Self {
        z.to_cf()
    }
    fn to_cf(&self) -> Cf {
        *self
    }
    fn re_positive(&self) -> bool {
        self.re > 0.0
    }
    fn render(&self) -> String {
        format!("{:e}{:+e}i", self.re, self.im)
    }
}

impl Scalar for Cq {
    fn conj(&self) -> Self {
        Complex::new(self.re.clone(), -self.im.clone())
    }
    fn mag(&self) -> f64 {
        self.to_cf().norm()
    }
    fn from_rational(r: &BigRational) -> Self {
        Complex::new(r.clone(), BigRational::zero())
    }
    fn from_cq(z: &Cq) -> Self {
        z.clone()
    }
    fn to_cf(&self) -> Cf {
        Complex::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }
    fn re_positive(&self) -> bool {
        self.re.is_positive()
    }
    fn render(&self) -> String {
        format!("{} + {}i", self.re, self.im)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<S> {
    pub n: usize,
    pub data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> S) -> Self {
        Matrix {
            n,
            data: (0..n * n).map(|k| f(k / n, k % n)).collect(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Matrix::from_fn(n, |i, j| if i == j { S::one() } else { S::zero() })
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.n + j]
    }

    pub fn mul(&self, o: &Matrix<S>) -> Matrix<S> {
        Matrix::from_fn(self.n, |i, j| {
            (0..self.n).fold(S::zero(), |acc, k| acc + self.get(i, k).clone() * o.get(k, j).clone())
        })
    }

    pub fn adjoint(&self) -> Matrix<S> {
        Matrix::from_fn(self.n, |i, j| self.get(j, i).conj())
    }

    /// Inverse and determinant by Gauss–Jordan elimination with partial pivoting.
    pub fn inverse_det(&self) -> Result<(Matrix<S>, S), SuperError> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut inv = Matrix::<S>::identity(n).data;
        let mut det = S::one();
        for col in 0..n {
            let piv = (col..n)
                .filter(|&r| !a[r * n + col].is_zero())
                .max_by(|&r, &s| a[r * n + col].mag().total_cmp(&a[s * n + col].mag()))
                .ok_or(SuperError::Singular)?;
            if piv != col {
                for k in 0..n {
                    a.swap(piv * n + k, col * n + k);
                    inv.swap(piv * n + k, col * n + k);
                }
                det = -det;
            }
            let p = a[col * n + col].clone();
            det = det * p.clone();
            for k in 0..n {
                a[col * n + k] = a[col * n + k].clone() / p.clone();
                inv[col * n + k] = inv[col * n + k].clone() / p.clone();
            }
            for r in 0..n {
                if r == col || a[r * n + col].is_zero() {
                    continue;
                }
                let f = a[r * n + col].clone();
                for k in 0..n {
                    a[r * n + k] = a[r * n + k].clone() - f.clone() * a[col * n + k].clone();
                    inv[r * n + k] = inv[r * n + k].clone() - f.clone() * inv[col * n + k].clone();
                }
            }
        }
        Ok((Matrix { n, data: inv }, det))
    }

    /// `C + C†` positive definite, by an `LDL†` pivot test.
    pub fn has_positive_hermitian_part(&self) -> bool {
        let n = self.n;
        let two = S::one() + S::one();
        let mut h: Vec<S> = (0..n * n)
            .map(|k| (self.data[k].clone() + self.get(k % n, k / n).conj()) / two.clone())
            .collect();
        for k in 0..n {
            let d = h[k * n + k].clone();
            if !d.re_positive() {
                return false;
            }
            for i in k + 1..n {
                let l = h[i * n + k].clone() / d.clone();
                for j in k + 1..n {
                    h[i * n + j] = h[i * n + j].clone() - l.clone() * h[k * n + j].clone();
                }
            }
        }
        true
    }
}

/// `C = I + 0.3 (R + iS)/‖R + iS‖_F`, seeded.
pub fn random_covariance(m: usize, seed: u64) -> Matrix<Cf> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let x: Vec<Cf> = (0..m * m)
            .map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let c = Matrix::from_fn(m, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            Complex::new(id, 0.0) + x[i * m + j] * (0.3 / norm)
        });
        if c.has_positive_hermitian_part() {
            return c;
        }
    }
}

/// The seeded covariance of `random_covariance`, rounded to multiples of `1/denom`.
pub fn random_covariance_exact(m: usize, seed: u64, denom: i64) -> Matrix<Cq> {
    let c = random_covariance(m, seed);
    let q = |x: f64| BigRational::new(BigInt::from((x * denom as f64).round() as i64), denom.into());
    Matrix::from_fn(m, |i, j| {
        let z = c.get(i, j);
        Complex::new(q(z.re), q(z.im))
    })
}

pub fn to_exact(c: &Matrix<Cf>) -> Matrix<Cq> {
    let q = |x: f64| BigRational::from_float(x).expect("finite");
    Matrix::from_fn(c.n, |i, j| Complex::new(q(c.get(i, j).re), q(c.get(i, j).im)))
}

pub fn permanent_naive<S: Scalar>(rows: &[Vec<S>]) -> S {
    let k = rows.len();
    let mut idx: Vec<usize> = (0..k).collect();
    let mut total = S::zero();
    // Heap's algorithm.
    let mut c = vec![0usize; k];
    let term = |idx: &[usize]| {
        idx.iter()
            .enumerate()
            .fold(S::one(), |acc, (l, &j)| acc * rows[l][j].clone())
    };
    total = total + term(&idx);
    let mut i = 0;
    while i < k {
        if c[i] < i {
            if i % 2 == 0 {
                idx.swap(0, i);
            } else {
                idx.swap(c[i], i);
            }
            total = total + term(&idx);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    total
}

/// Ryser's inclusion–exclusion formula.
pub fn permanent_ryser<S: Scalar>(rows: &[Vec<S>]) -> S {
    let k = rows.len();
    if k == 0 {
        return S::one();
    }
    let mut total = S::zero();
    for subset in 1u32..(1 << k) {
        let mut prod = S::one();
        for row in rows {
            let s = (0..k)
                .filter(|j| subset >> j & 1 == 1)
                .fold(S::zero(), |acc, j| acc + row[j].clone());
            prod = prod * s;
        }
        if (k - subset.count_ones() as usize) % 2 == 1 {
            total = total - prod;
        } else {
            total = total + prod;
        }
    }
    total
}

/// `Σ_{σ ∈ S_k} Π_l C_{x_l, y_σ(l)}`, cross-checked against the naive sum for `k <= 4`.
pub fn wick_permanent<S: Scalar>(c: &Matrix<S>, xs: &[usize], ys: &[usize]) -> Result<S, SuperError> {
    if xs.len() != ys.len() {
        return Err(SuperError::Dimension);
    }
    for list in [xs, ys] {
        if let Some(&bad) = list.iter().find(|&&i| i >= c.n) {
            return Err(SuperError::IndexOutOfRange(bad));
        }
        let mut s = list.to_vec();
        s.sort();
        s.dedup();
        if s.len() != list.len() {
            return Err(SuperError::DuplicateIndex);
        }
    }
    let rows: Vec<Vec<S>> = xs
        .iter()
        .map(|&x| ys.iter().map(|&y| c.get(x, y).clone()).collect())
        .collect();
    let value = permanent_ryser(&rows);
    if xs.len() <= 4 {
        let naive = permanent_naive(&rows);
        let scale = rows.iter().flatten().map(|v| v.mag()).fold(1.0, f64::max).powi(xs.len() as i32);
        if (naive - value.clone()).mag() > 1e-12 * scale {
            return Err(SuperError::Inconsistent);
        }
    }
    Ok(value)
}

/// Sign of `ω_a ω_b` relative to the canonical product of `a | b`; `None` if they overlap.
pub fn fermion_sign(a: u32, b: u32) -> Option<bool> {
    if a & b != 0 {
        return None;
    }
    let mut swaps = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        swaps += (a >> (j + 1)).count_ones();
        rest &= rest - 1;
    }
    Some(swaps % 2 == 1)
}

pub type Monomial = Vec<u8>;

#[derive(Debug, Clone, PartialEq)]
pub struct Form<S> {
    pub m: usize,
    /// `(fermion mask, boson exponents)` -> coefficient; exponent `2x` is for
    /// `φ_x`, `2x + 1` for `φ̄_x`.
    pub terms: BTreeMap<(u32, Monomial), S>,
}

impl<S: Scalar> Form<S> {
    pub fn zero(m: usize) -> Self {
        assert!(m <= MAX_SITES);
        Form {
            m,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(m: usize, c: S) -> Self {
        let mut f = Form::zero(m);
        f.add_term(0, vec![0; 2 * m], c);
        f
    }

    pub fn one(m: usize) -> Self {
        Form::constant(m, S::one())
    }

    fn boson(m: usize, slot: usize) -> Self {
        let mut e = vec![0; 2 * m];
        e[slot] = 1;
        let mut f = Form::zero(m);
        f.add_term(0, e, S::one());
        f
    }

    fn fermion(m: usize, bit: usize) -> Self {
        let mut f = Form::zero(m);
        f.add_term(1 << bit, vec![0; 2 * m], S::one());
        f
    }

    pub fn phi(m: usize, x: usize) -> Self {
        Form::boson(m, 2 * x)
    }

    pub fn phibar(m: usize, x: usize) -> Self {
        Form::boson(m, 2 * x + 1)
    }

    pub fn psi(m: usize, x: usize) -> Self {
        Form::fermion(m, 2 * x)
    }

    pub fn psibar(m: usize, x: usize) -> Self {
        Form::fermion(m, 2 * x + 1)
    }

    /// `τ_x = φ_x φ̄_x + ψ_x ψ̄_x`.
    pub fn tau(m: usize, x: usize) -> Self {
        Form::phi(m, x)
            .mul(&Form::phibar(m, x))
            .add(&Form::psi(m, x).mul(&Form::psibar(m, x)))
    }

    pub fn add_term(&mut self, mask: u32, mono: Monomial, c: S) {
        if c.is_zero() {
            return;
        }
        let key = (mask, mono);
        let v = self.terms.remove(&key).map(|v| v + c.clone()).unwrap_or(c);
        if !v.is_zero() {
            self.terms.insert(key, v);
        }
    }

    pub fn add(&self, o: &Form<S>) -> Form<S> {
        let mut f = self.clone();
        for ((mask, mono), c) in &o.terms {
            f.add_term(*mask, mono.clone(), c.clone());
        }
        f
    }

    pub fn scale(&self, s: &S) -> Form<S> {
        let mut f = Form::zero(self.m);
        for ((mask, mono), c) in &self.terms {
            f.add_term(*mask, mono.clone(), c.clone() * s.clone());
        }
        f
    }

    pub fn sub(&self, o: &Form<S>) -> Form<S> {
        self.add(&o.scale(&-S::one()))
    }

    pub fn mul(&self, o: &Form<S>) -> Form<S> {
        assert_eq!(self.m, o.m);
        let mut f = Form::zero(self.m);
        for ((ma, ea), ca) in &self.terms {
            for ((mb, eb), cb) in &o.terms {
                let Some(neg) = fermion_sign(*ma, *mb) else { continue };
                let mono: Monomial = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                let c = ca.clone() * cb.clone();
                f.add_term(ma | mb, mono, if neg { -c } else { c });
            }
        }
        f
    }

    /// `∂/∂φ_x`, acting on the boson coefficients.
    pub fn d_phi(&self, x: usize) -> Form<S> {
        let mut f = Form::zero(self.m);
        for ((mask, mono), c) in &self.terms {
            let k = mono[2 * x];
            if k == 0 {
                continue;
            }
            let mut e = mono.clone();
            e[2 * x] -= 1;
            f.add_term(*mask, e, c.clone() * S::from_rational(&BigRational::from_integer(k.into())));
        }
        f
    }

    /// Every term has even fermion degree.
    pub fn is_even(&self) -> bool {
        self.terms.keys().all(|(mask, _)| mask.count_ones() % 2 == 0)
    }

    pub fn fermion_degree(&self) -> u32 {
        self.terms.keys().map(|(mask, _)| mask.count_ones()).max().unwrap_or(0)
    }

    /// Coefficient of the canonical product `ψ_1 ψ̄_1 ⋯ ψ_M ψ̄_M` in the
    /// purely fermionic part.
    pub fn top_coefficient(&self) -> S {
        let full = full_mask(self.m);
        self.terms
            .get(&(full, vec![0; 2 * self.m]))
            .cloned()
            .unwrap_or_else(S::zero)
    }
}

pub fn full_mask(m: usize) -> u32 {
    if m == 0 {
        0
    } else {
        (1u32 << (2 * m)) - 1
    }
}

/// `ψ A ψ̄ = Σ_{x,y} A_{xy} ψ_x ψ̄_y`.
pub fn fermion_quadratic<S: Scalar>(a: &Matrix<S>) -> Form<S> {
    let m = a.n;
    let mut f = Form::zero(m);
    for x in 0..m {
        for y in 0..m {
            let p = Form::psi(m, x).mul(&Form::psibar(m, y));
            f = f.add(&p.scale(a.get(x, y)));
        }
    }
    f
}

/// `e^{-ψAψ̄} = Σ_{n <= M} (-1)^n (ψAψ̄)^n / n!`.
pub fn exp_fermion_quadratic<S: Scalar>(a: &Matrix<S>) -> Form<S> {
    let m = a.n;
    let q = fermion_quadratic(a).scale(&-S::one());
    let mut total = Form::one(m);
    let mut power = Form::one(m);
    for n in 1..=m {
        power = power
            .mul(&q)
            .scale(&S::from_rational(&BigRational::new(1.into(), (n as i64).into())));
        total = total.add(&power);
    }
    total
}

#[derive(Debug, Clone)]
pub struct Gaussian<S> {
    pub a: Matrix<S>,
    pub c: Matrix<S>,
    pub det_a: S,
    /// Fermionic coefficients of `e^{-ψAψ̄}` by mask.
    pub fermion_exp: BTreeMap<u32, S>,
}

impl<S: Scalar> Gaussian<S> {
    pub fn from_covariance(c: &Matrix<S>) -> Result<Self, SuperError> {
        if !c.has_positive_hermitian_part() {
            return Err(SuperError::NotPositive);
        }
        let (a, _) = c.inverse_det()?;
        let (_, det_a) = a.inverse_det()?;
        let fermion_exp = exp_fermion_quadratic(&a)
            .terms
            .into_iter()
            .map(|((mask, _), v)| (mask, v))
            .collect();
        Ok(Gaussian {
            a,
            c: c.clone(),
            det_a,
            fermion_exp,
        })
    }

    pub fn m(&self) -> usize {
        self.c.n
    }

    /// `E_C[Π φ_x^{a_x} φ̄_x^{b_x}]`: the permanent pairing each `φ̄_x` with a `φ_y`.
    pub fn boson_expectation(&self, mono: &[u8]) -> S {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for x in 0..self.m() {
            ys.extend(std::iter::repeat_n(x, mono[2 * x] as usize));
            xs.extend(std::iter::repeat_n(x, mono[2 * x + 1] as usize));
        }
        if xs.len() != ys.len() {
            return S::zero();
        }
        let rows: Vec<Vec<S>> = xs
            .iter()
            .map(|&x| ys.iter().map(|&y| self.c.get(x, y).clone()).collect())
            .collect();
        permanent_ryser(&rows)
    }

    /// `∫ e^{-S_A} F`.
    pub fn superexpectation(&self, f: &Form<S>) -> S {
        let m = self.m();
        let full = full_mask(m);
        let mut total = S::zero();
        for ((mask, mono), c) in &f.terms {
            let rest = full & !mask;
            let Some(e) = self.fermion_exp.get(&rest) else { continue };
            let neg = fermion_sign(*mask, rest).expect("disjoint");
            let top = if neg { -e.clone() } else { e.clone() };
            total = total + c.clone() * top * self.boson_expectation(mono);
        }
        let sign = if m % 2 == 1 { -S::one() } else { S::one() };
        total * sign / self.det_a.clone()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub lhs: String,
    pub rhs: String,
    pub residual: f64,
    pub holds: bool,
}

/// `holds` when `|lhs - rhs| <= tol * max(1, |lhs|)`.
fn compare<S: Scalar>(lhs: &S, rhs: &S, tol: f64) -> Comparison {
    let residual = (lhs.clone() - rhs.clone()).mag();
    Comparison {
        lhs: lhs.render(),
        rhs: rhs.render(),
        residual,
        holds: residual <= tol * lhs.mag().max(1.0),
    }
}

/// `∫ e^{-S_A} φ̄_a F` against `Σ_x C_{ax} ∫ e^{-S_A} ∂F/∂φ_x`.
pub fn integration_by_parts_check<S: Scalar>(
    g: &Gaussian<S>,
    a: usize,
    f: &Form<S>,
    tol: f64,
) -> Result<Comparison, SuperError> {
    let m = g.m();
    if a >= m {
        return Err(SuperError::IndexOutOfRange(a));
    }
    let lhs = g.superexpectation(&Form::phibar(m, a).mul(f));
    let rhs = (0..m).fold(S::zero(), |acc, x| {
        acc + g.c.get(a, x).clone() * g.superexpectation(&f.d_phi(x))
    });
    Ok(compare(&lhs, &rhs, tol))
}

/// `Σ_ω C^ω` over sequences `(a, x_1, …, x_{n-1}, b)`, `n >= 1`, with distinct
/// `x_i` drawn from `pool`.
pub fn saw_sum<S: Scalar>(c: &Matrix<S>, a: usize, b: usize, pool: &[usize]) -> S {
    fn go<S: Scalar>(c: &Matrix<S>, cur: usize, b: usize, pool: &[usize], used: &mut Vec<bool>, w: S) -> S {
        let mut total = w.clone() * c.get(cur, b).clone();
        for (i, &x) in pool.iter().enumerate() {
            if used[i] {
                continue;
            }
            used[i] = true;
            total = total + go(c, x, b, pool, used, w.clone() * c.get(cur, x).clone());
            used[i] = false;
        }
        total
    }
    go(c, a, b, pool, &mut vec![false; pool.len()], S::one())
}

fn others(m: usize, a: usize, b: usize) -> Vec<usize> {
    (0..m).filter(|&x| x != a && x != b).collect()
}

/// Direct walk sum against `∫ e^{-S_A} φ̄_a φ_b Π_{x ≠ a,b} (1 + τ_x)`.
pub fn saw_representation_check<S: Scalar>(
    g: &Gaussian<S>,
    a: usize,
    b: usize,
    cap: usize,
    tol: f64,
) -> Result<Comparison, SuperError> {
    let m = g.m();
    if m > cap {
        return Err(SuperError::CapExceeded { m, cap });
    }
    for i in [a, b] {
        if i >= m {
            return Err(SuperError::IndexOutOfRange(i));
        }
    }
    let pool = others(m, a, b);
    let lhs = saw_sum(&g.c, a, b, &pool);
    let mut f = Form::phibar(m, a).mul(&Form::phi(m, b));
    for &x in &pool {
        f = f.mul(&Form::one(m).add(&Form::tau(m, x)));
    }
    let rhs = g.superexpectation(&f);
    Ok(compare(&lhs, &rhs, tol))
}

#[derive(Debug, Clone, Serialize)]
pub struct LoopModel {
    /// `E_C[φ̄_a φ_b Π_{x∈X}(1 + φ_x φ̄_x)]` by Wick.
    pub wick: String,
    /// `Σ_ω C^ω Σ_{Z ⊂ X∖ω} Σ_{σ ∈ S(Z)} Π C_{z,σ(z)}`.
    pub combinatorial: String,
    pub residual: f64,
    pub holds: bool,
}

fn all_permutation_sum<S: Scalar>(c: &Matrix<S>, z: &[usize]) -> S {
    let rows: Vec<Vec<S>> = z
        .iter()
        .map(|&x| z.iter().map(|&y| c.get(x, y).clone()).collect())
        .collect();
    permanent_naive(&rows)
}

/// Both sides of the loop-model expansion, as values.
pub fn loop_model_values<S: Scalar>(
    c: &Matrix<S>,
    a: usize,
    b: usize,
    x: &[usize],
    cap: usize,
) -> Result<(S, S), SuperError> {
    let m = c.n;
    if m > cap {
        return Err(SuperError::CapExceeded { m, cap });
    }
    if x.iter().any(|&v| v == a || v == b || v >= m) {
        return Err(SuperError::Dimension);
    }
    let g_rows = |z: &[usize]| -> S {
        // E[φ̄_a φ_b Π_{z∈Z} φ_z φ̄_z] = perm of C on rows (a, Z), columns (b, Z).
        let rows_idx: Vec<usize> = std::iter::once(a).chain(z.iter().copied()).collect();
        let cols_idx: Vec<usize> = std::iter::once(b).chain(z.iter().copied()).collect();
        let rows: Vec<Vec<S>> = rows_idx
            .iter()
            .map(|&r| cols_idx.iter().map(|&s| c.get(r, s).clone()).collect())
            .collect();
        permanent_ryser(&rows)
    };
    let subsets = |set: &[usize]| -> Vec<Vec<usize>> {
        (0u32..1 << set.len())
            .map(|mask| set.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &v)| v).collect())
            .collect()
    };
    let wick = subsets(x).iter().fold(S::zero(), |acc, z| acc + g_rows(z));
    // Combinatorial side: walks with intermediates in X, loops in the rest.
    fn walks<S: Scalar>(
        c: &Matrix<S>,
        cur: usize,
        b: usize,
        pool: &[usize],
        used: &mut Vec<bool>,
        w: S,
        out: &mut Vec<(S, Vec<bool>)>,
    ) {
        out.push((w.clone() * c.get(cur, b).clone(), used.clone()));
        for (i, &x) in pool.iter().enumerate() {
            if used[i] {
                continue;
            }
            used[i] = true;
            walks(c, x, b, pool, used, w.clone() * c.get(cur, x).clone(), out);
            used[i] = false;
        }
    }
    let mut ws = Vec::new();
    walks(c, a, b, x, &mut vec![false; x.len()], S::one(), &mut ws);
    let mut combinatorial = S::zero();
    for (w, used) in ws {
        let free: Vec<usize> = x.iter().enumerate().filter(|(i, _)| !used[*i]).map(|(_, &v)| v).collect();
        let loops = subsets(&free)
            .iter()
            .fold(S::zero(), |acc, z| acc + all_permutation_sum(c, z));
        combinatorial = combinatorial + w * loops;
    }
    Ok((wick, combinatorial))
}

pub fn loop_model_expansion<S: Scalar>(
    c: &Matrix<S>,
    a: usize,
    b: usize,
    x: &[usize],
    cap: usize,
    tol: f64,
) -> Result<LoopModel, SuperError> {
    let (w, k) = loop_model_values(c, a, b, x, cap)?;
    let cmp = compare(&w, &k, tol);
    Ok(LoopModel {
        wick: cmp.lhs,
        combinatorial: cmp.rhs,
        residual: cmp.residual,
        holds: cmp.holds,
    })
}

/// A random polynomial form with `terms` terms, small boson degree and
/// fermion degree at most 4.
pub fn random_form(m: usize, terms: usize, rng: &mut impl Rng) -> Form<Cq> {
    let mut f = Form::zero(m);
    for _ in 0..terms {
        let mut mask = 0u32;
        for _ in 0..rng.gen_range(0..=4usize) {
            mask |= 1 << rng.gen_range(0..2 * m);
        }
        let mono: Monomial = (0..2 * m).map(|_| if rng.gen_bool(0.25) { rng.gen_range(1..=2) } else { 0 }).collect();
        let c = Complex::new(
            BigRational::new(rng.gen_range(-9i64..=9).into(), rng.gen_range(1i64..=4).into()),
            BigRational::new(rng.gen_range(-9i64..=9).into(), rng.gen_range(1i64..=4).into()),
        );
        f.add_term(mask, mono, c);
    }
    f
}

/// A random polynomial `F(τ)` of total degree at most `degree`, with its
/// constant term `F(0)`.
pub fn random_tau_polynomial(m: usize, degree: u32, rng: &mut impl Rng) -> (Form<Cq>, Cq) {
    let mut f = Form::zero(m);
    let mut constant = Cq::zero();
    for _ in 0..rng.gen_range(1..=5usize) {
        let c = Complex::new(
            BigRational::new(rng.gen_range(-9i64..=9).into(), rng.gen_range(1i64..=4).into()),
            BigRational::new(rng.gen_range(-9i64..=9).into(), rng.gen_range(1i64..=4).into()),
        );
        let deg = rng.gen_range(0..=degree);
        let mut t = Form::constant(m, c.clone());
        for _ in 0..deg {
            t = t.mul(&Form::tau(m, rng.gen_range(0..m)));
        }
        if deg == 0 {
            constant = constant + c;
        }
        f = f.add(&t);
    }
    (f, constant)
}

pub fn convert_form<S: Scalar>(f: &Form<Cq>) -> Form<S> {
    Form {
        m: f.m,
        terms: f.terms.iter().map(|(k, v)| (k.clone(), S::from_cq(v))).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn cq(re: i64, im: i64) -> Cq {
        Complex::new(BigRational::from_integer(re.into()), BigRational::from_integer(im.into()))
    }

    #[test]
    fn generators_anticommute() {
        let m = 3;
        let gens: Vec<Form<Cq>> = (0..m)
            .flat_map(|x| [Form::psi(m, x), Form::psibar(m, x)])
            .collect();
        for g in &gens {
            assert!(g.mul(g).terms.is_empty());
            for h in &gens {
                assert_eq!(g.mul(h), h.mul(g).scale(&cq(-1, 0)));
            }
        }
    }

    #[test]
    fn normalisation_exact() {
        let c = random_covariance_exact(3, 11, 64);
        let g = Gaussian::from_covariance(&c).unwrap();
        assert_eq!(g.superexpectation(&Form::one(3)), Cq::one());
        let f = Form::phibar(3, 0).mul(&Form::phi(3, 2));
        assert_eq!(g.superexpectation(&f), c.get(0, 2).clone());
    }

    #[test]
    fn permanent_small() {
        let rows = vec![vec![cq(1, 0), cq(2, 0)], vec![cq(3, 0), cq(4, 0)]];
        assert_eq!(permanent_ryser(&rows), cq(10, 0));
        assert_eq!(permanent_naive(&rows), cq(10, 0));
    }

    #[test]
    fn sign_of_products() {
        // ψ̄_1 ψ_1 = -ψ_1 ψ̄_1.
        assert_eq!(fermion_sign(0b10, 0b01), Some(true));
        assert_eq!(fermion_sign(0b01, 0b10), Some(false));
        assert_eq!(fermion_sign(0b01, 0b01), None);
    }
}
