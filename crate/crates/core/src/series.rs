//! Truncated power series over exact counts: susceptibility, bubble, Fourier
//! evaluation, simple random walk reference integrals and series-level
//! inequalities.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::ops::{Add, Mul, Sub};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::laceexp::{cosine_transform, pi_via_laces, pi_via_recursion, LaceError, PointMap};
use crate::lattice::{step_set, LatticeError, LatticeSpec, Point};
use crate::precise::{Precise, Real};
use crate::walks::{count_restricted, count_saws, count_walks, EngineConfig, WalkError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeriesError {
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Lace(#[from] LaceError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("|z| (|Ω| - 1) must be < 1, got z = {0}")]
    OutsideGuard(String),
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("{0}")]
    Precondition(String),
}

/// Coefficients `a_0..a_{n_max}`; every operation truncates at the smaller order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeriesTrunc {
    pub coeffs: Vec<BigRational>,
}

fn rat(x: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(x.into())
}

impl SeriesTrunc {
    pub fn new(coeffs: Vec<BigRational>) -> Self {
        assert!(!coeffs.is_empty(), "a truncation needs order >= 0");
        SeriesTrunc { coeffs }
    }

    pub fn from_integers<T: Clone + Into<BigInt>>(c: &[T]) -> Self {
        SeriesTrunc::new(c.iter().map(|v| rat(v.clone())).collect())
    }

    pub fn zero(n_max: usize) -> Self {
        SeriesTrunc::new(vec![BigRational::zero(); n_max + 1])
    }

    pub fn one(n_max: usize) -> Self {
        let mut s = SeriesTrunc::zero(n_max);
        s.coeffs[0] = BigRational::one();
        s
    }

    pub fn n_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, i: usize) -> BigRational {
        self.coeffs.get(i).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn truncate(&self, n_max: usize) -> Self {
        SeriesTrunc::new((0..=n_max.min(self.n_max())).map(|i| self.coeff(i)).collect())
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        SeriesTrunc::new(self.coeffs.iter().map(|c| c * r).collect())
    }

    /// Multiplication by `z`; the top coefficient falls off.
    pub fn shift(&self) -> Self {
        let mut c = vec![BigRational::zero()];
        c.extend(self.coeffs[..self.n_max()].iter().cloned());
        SeriesTrunc::new(c)
    }

    /// `d/dz`, known to order `n_max - 1`.
    pub fn derivative(&self) -> Self {
        if self.n_max() == 0 {
            return SeriesTrunc::zero(0);
        }
        SeriesTrunc::new(
            (1..=self.n_max())
                .map(|i| &self.coeffs[i] * rat(i as i64))
                .collect(),
        )
    }

    pub fn eval(&self, z: &BigRational) -> BigRational {
        self.coeffs
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * z + c)
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.coeffs.iter().map(|c| c.to_string()).collect()
    }
}

impl Add for &SeriesTrunc {
    type Output = SeriesTrunc;
    fn add(self, o: &SeriesTrunc) -> SeriesTrunc {
        let n = self.n_max().min(o.n_max());
        SeriesTrunc::new((0..=n).map(|i| &self.coeffs[i] + &o.coeffs[i]).collect())
    }
}

impl Sub for &SeriesTrunc {
    type Output = SeriesTrunc;
    fn sub(self, o: &SeriesTrunc) -> SeriesTrunc {
        let n = self.n_max().min(o.n_max());
        SeriesTrunc::new((0..=n).map(|i| &self.coeffs[i] - &o.coeffs[i]).collect())
    }
}

impl Mul for &SeriesTrunc {
    type Output = SeriesTrunc;
    fn mul(self, o: &SeriesTrunc) -> SeriesTrunc {
        let n = self.n_max().min(o.n_max());
        SeriesTrunc::new(
            (0..=n)
                .map(|k| (0..=k).map(|i| &self.coeffs[i] * &o.coeffs[k - i]).sum())
                .collect(),
        )
    }
}

fn int_map(m: &BTreeMap<Point, BigUint>) -> PointMap {
    m.iter().map(|(k, v)| (k.clone(), BigInt::from(v.clone()))).collect()
}

/// `χ(z)` truncated: coefficients `c_n^{(λ)}`.
pub fn susceptibility_series(
    spec: &LatticeSpec,
    lambda: &BigRational,
    n_max: usize,
    cfg: &EngineConfig,
) -> Result<SeriesTrunc, SeriesError> {
    Ok(SeriesTrunc::new(count_walks(spec, n_max, lambda, false, cfg)?.totals))
}

/// Two-point function `G_z(x)` truncated, from an endpoint table.
pub fn two_point_series(table: &[BTreeMap<Point, BigUint>], x: &[i32]) -> SeriesTrunc {
    SeriesTrunc::new(
        table
            .iter()
            .map(|m| m.get(x).map(|v| rat(v.clone())).unwrap_or_else(BigRational::zero))
            .collect(),
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct ChiLowerBound {
    pub n: usize,
    pub b_n: String,
    /// Orders `k` at which `b_n^k <= c_k^n` fails.
    pub violations: Vec<usize>,
}

/// Checks `(b_n^{1/n})^k <= c_k` for `k <= n`, i.e. `b_n^k <= c_k^n` exactly.
pub fn chi_lower_bound_check(
    spec: &LatticeSpec,
    n: usize,
    cfg: &EngineConfig,
) -> Result<ChiLowerBound, SeriesError> {
    let c = count_saws(spec, n, false, cfg)?.totals;
    let b = crate::walks::count_bridges(spec, n, false, cfg)?.totals[n].clone();
    let violations = (0..=n)
        .filter(|&k| num_traits::pow(b.clone(), k) > num_traits::pow(c[k].clone(), n))
        .collect();
    Ok(ChiLowerBound {
        n,
        b_n: b.to_string(),
        violations,
    })
}

/// `𝖡(z) = Σ_x G_z(x)^2` truncated at `n_max`.
pub fn bubble_series(
    spec: &LatticeSpec,
    n_max: usize,
    cfg: &EngineConfig,
) -> Result<SeriesTrunc, SeriesError> {
    let t = count_saws(spec, n_max, true, cfg)?;
    Ok(bubble_from_table(&t.by_endpoint))
}

pub fn bubble_from_table(table: &[BTreeMap<Point, BigUint>]) -> SeriesTrunc {
    let n_max = table.len() - 1;
    let coeffs = (0..=n_max)
        .map(|m| {
            let mut acc = BigUint::zero();
            for i in 0..=m {
                for (x, a) in &table[i] {
                    if let Some(b) = table[m - i].get(x) {
                        acc += a * b;
                    }
                }
            }
            rat(acc)
        })
        .collect();
    SeriesTrunc::new(coeffs)
}

#[derive(Debug, Clone, Serialize)]
pub struct OdeReport {
    pub n_max: usize,
    /// `[z^n] d[zχ]/dz` for `n < n_max`.
    pub lhs: Vec<String>,
    /// `[z^n] V χ^2` for `n < n_max`.
    pub rhs: Vec<String>,
    pub holds: bool,
}

/// Checks `d[zχ]/dz = (1 - Π̂ + z Π̂') χ^2` coefficientwise below `n_max`.
pub fn susceptibility_ode_check(
    spec: &LatticeSpec,
    n_max: usize,
    cfg: &EngineConfig,
) -> Result<OdeReport, SeriesError> {
    let chi = susceptibility_series(spec, &BigRational::one(), n_max, cfg)?;
    let pi = pi_via_recursion(spec, n_max, cfg)?;
    let pi_hat = SeriesTrunc::from_integers(&pi.pi_hat());
    Ok(ode_report(&chi, &pi_hat))
}

pub fn ode_report(chi: &SeriesTrunc, pi_hat: &SeriesTrunc) -> OdeReport {
    let n_max = chi.n_max().min(pi_hat.n_max());
    let v = &(&SeriesTrunc::one(n_max) - pi_hat) + &pi_hat.derivative().shift().truncate(n_max);
    let lhs = chi.shift().derivative();
    let rhs = &(&v * chi) * chi;
    let keep = n_max.saturating_sub(1);
    let lhs = lhs.truncate(keep);
    let rhs = rhs.truncate(keep);
    OdeReport {
        n_max,
        holds: lhs == rhs,
        lhs: lhs.to_strings(),
        rhs: rhs.to_strings(),
    }
}

/// `z` must satisfy `|z| (|Ω| - 1) < 1`.
fn check_guard(spec: &LatticeSpec, z: &BigRational) -> Result<(), SeriesError> {
    if z.abs() * rat(spec.degree() as i64 - 1) >= BigRational::one() {
        return Err(SeriesError::OutsideGuard(z.to_string()));
    }
    Ok(())
}

/// Bound on `Σ_{n > n_max} c_n |z|^n` from `c_n <= |Ω| (|Ω| - 1)^{n-1}`.
pub fn geometric_tail(spec: &LatticeSpec, z: &BigRational, n_max: usize) -> BigRational {
    let a = rat(spec.degree() as i64);
    let b = &a - BigRational::one();
    let z = z.abs();
    let num = &a * num_traits::pow(z.clone(), n_max + 1) * num_traits::pow(b.clone(), n_max);
    num / (BigRational::one() - b * z)
}

#[derive(Debug, Clone, Serialize)]
pub struct ReciprocalCheck {
    /// `(1 - z ĉ₁(k) - Π̂_z(k)) Ĝ_z(k) - 1` with both factors truncated.
    pub residual: f64,
    /// The part of `residual` coming from orders above the truncation.
    pub excess: f64,
    pub tolerance: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FourierEval {
    /// Wave vector as multiples of π.
    pub k: Vec<String>,
    pub z: String,
    pub n_max: usize,
    pub bits: usize,
    pub value: String,
    pub value_f64: f64,
    pub imag_f64: f64,
    pub tail_bound: f64,
    pub reciprocal: ReciprocalCheck,
}

struct Transforms<R> {
    re: Vec<R>,
    im: Vec<R>,
}

fn transform<R: Real>(tables: &[PointMap], k: &[BigRational], bits: usize) -> Transforms<R> {
    let mut phases: BTreeMap<Point, (R, R)> = BTreeMap::new();
    let mut re = Vec::new();
    let mut im = Vec::new();
    for t in tables {
        let (mut a, mut b) = (R::zero(bits), R::zero(bits));
        for (x, v) in t {
            let (c, s) = phases
                .entry(x.clone())
                .or_insert_with(|| {
                    let arg: BigRational = x.iter().zip(k).map(|(&xj, kj)| kj * rat(xj)).sum();
                    (R::cos_pi(&arg, bits), R::sin_pi(&arg, bits))
                })
                .clone();
            let w = R::from_ratio(&BigRational::from_integer(v.clone()), bits);
            a = a + w.clone() * c;
            b = b + w * s;
        }
        re.push(a);
        im.push(b);
    }
    Transforms { re, im }
}

fn horner<R: Real>(c: &[R], z: &R, bits: usize) -> R {
    c.iter().rev().fold(R::zero(bits), |acc, a| acc * z.clone() + a.clone())
}

fn fourier_with<R: Real>(
    c: &[PointMap],
    pi: &[PointMap],
    z: &BigRational,
    k: &[BigRational],
    bits: usize,
) -> (R, R, ReciprocalCheck) {
    let n_max = c.len() - 1;
    let zr = R::from_ratio(z, bits);
    let g = transform::<R>(c, k, bits);
    let p = transform::<R>(pi, k, bits);
    let value = horner(&g.re, &zr, bits);
    let imag = horner(&g.im, &zr, bits);
    // f_0 = 1, f_1 = -ĉ₁ - π̂_1, f_m = -π̂_m.
    let mut f: Vec<R> = (0..=n_max)
        .map(|m| match p.re.get(m) {
            Some(v) if m > 0 => -v.clone(),
            _ => R::zero(bits),
        })
        .collect();
    f[0] = R::one(bits);
    if n_max >= 1 {
        f[1] = f[1].clone() - g.re[1].clone();
    }
    let mut prod = vec![R::zero(bits); 2 * n_max + 1];
    for (i, fi) in f.iter().enumerate() {
        for (j, gj) in g.re.iter().enumerate() {
            prod[i + j] = prod[i + j].clone() + fi.clone() * gj.clone();
        }
    }
    let excess = horner(&prod[n_max + 1..], &zr, bits) * horner(
        &{
            let mut v = vec![R::zero(bits); n_max + 1];
            v.push(R::one(bits));
            v
        },
        &zr,
        bits,
    );
    let residual = horner(&f, &zr, bits) * value.clone() - R::one(bits);
    let scale: f64 = g
        .re
        .iter()
        .chain(p.re.iter())
        .map(|v| v.to_f64().abs())
        .fold(1.0, f64::max);
    let tolerance = scale * scale * (n_max as f64 + 1.0).powi(2) * 2f64.powi(-(bits as i32) + 4);
    let gap = (residual.clone() - excess.clone()).abs().to_f64();
    let check = ReciprocalCheck {
        residual: residual.to_f64(),
        excess: excess.to_f64(),
        tolerance,
        holds: gap <= tolerance,
    };
    (value, imag, check)
}

/// `Ĝ_z(k)` truncated at `n_max` with the geometric tail bound, and the
/// reciprocal identity `Ĝ_z(k) (1 - z ĉ₁(k) - Π̂_z(k)) = 1` checked on the
/// truncations. `bits == 53` evaluates in `f64`.
pub fn fourier_two_point(
    spec: &LatticeSpec,
    z: &BigRational,
    k: &[BigRational],
    n_max: usize,
    bits: usize,
    cfg: &EngineConfig,
) -> Result<FourierEval, SeriesError> {
    check_guard(spec, z)?;
    if k.len() != spec.dim() as usize {
        return Err(SeriesError::Precondition(format!(
            "wave vector needs {} components",
            spec.dim()
        )));
    }
    let c: Vec<PointMap> = count_saws(spec, n_max, true, cfg)?
        .by_endpoint
        .iter()
        .map(int_map)
        .collect();
    let pi = pi_via_recursion(spec, n_max, cfg)?.pi;
    let (value, value_f64, imag_f64, reciprocal) = if bits == 53 {
        let (v, i, r) = fourier_with::<f64>(&c, &pi, z, k, 53);
        (format!("{v:e}"), v, i, r)
    } else {
        let (v, i, r) = fourier_with::<Precise>(&c, &pi, z, k, bits);
        let digits = (bits as f64 / std::f64::consts::LOG2_10) as usize;
        (v.to_decimal(digits), v.to_f64(), i.to_f64(), r)
    };
    Ok(FourierEval {
        k: k.iter().map(|t| t.to_string()).collect(),
        z: z.to_string(),
        n_max,
        bits,
        value,
        value_f64,
        imag_f64,
        tail_bound: geometric_tail(spec, z, n_max).to_f64().unwrap_or(f64::INFINITY),
        reciprocal,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SrwTask {
    /// `∫ 1/(1 - D̂(k)) dk/(2π)^d`, the expected number of visits to 0.
    ReturnIntegral,
    /// `∫ 1/(1 - D̂(k))^2 dk/(2π)^d`.
    IntersectionIntegral,
    /// `G(0)` for the critical simple random walk, by direct tensor-product
    /// quadrature over the torus; an independent evaluation of `ReturnIntegral`.
    GreenValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SrwValue {
    Value { value: f64, error: f64 },
    Divergent,
}

/// `e^{-x} I_0(x)` for `x >= 0`.
pub fn scaled_bessel_i0(x: f64) -> f64 {
    if x < 30.0 {
        bessel_power_series(x)
    } else {
        bessel_asymptotic(x)
    }
}

fn bessel_power_series(x: f64) -> f64 {
    {
        let q = x * x / 4.0;
        let (mut term, mut sum, mut k) = (1.0f64, 1.0f64, 0.0f64);
        while term > sum * 1e-18 {
            k += 1.0;
            term *= q / (k * k);
            sum += term;
        }
        sum * (-x).exp()
    }
}

fn bessel_asymptotic(x: f64) -> f64 {
    {
        // Asymptotic series, cut at its smallest term.
        let (mut term, mut sum, mut k) = (1.0f64, 1.0f64, 0.0f64);
        loop {
            k += 1.0;
            let next = term * (2.0 * k - 1.0).powi(2) / (8.0 * k * x);
            if next >= term || next < sum * 1e-18 {
                break;
            }
            term = next;
            sum += term;
        }
        sum / (2.0 * std::f64::consts::PI * x).sqrt()
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

fn composite_gl(f: &dyn Fn(f64) -> f64, a: f64, b: f64, pieces: usize, rule: &[(f64, f64)]) -> f64 {
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|p| {
            let lo = a + h * p as f64;
            rule.iter()
                .map(|&(x, w)| w * f(lo + h * (x + 1.0) / 2.0))
                .sum::<f64>()
                * h
                / 2.0
        })
        .sum()
}

/// `(1/Γ(m)) ∫_0^∞ u^{m-1} (e^{-u/d} I_0(u/d))^d du`.
fn bessel_representation(d: u32, m: u32, pieces: usize) -> f64 {
    let df = d as f64;
    let g = |u: f64| u.powi(m as i32 - 1) * scaled_bessel_i0(u / df).powi(d as i32);
    let rule = gauss_legendre(20);
    let cut = 1.0e4f64;
    let head = composite_gl(&g, 0.0, 1.0, pieces, &rule);
    // On [1, cut] substitute u = e^t.
    let gt = |t: f64| {
        let u = t.exp();
        g(u) * u
    };
    let body = composite_gl(&gt, 0.0, cut.ln(), pieces * 8, &rule);
    // Tail from the asymptotic expansion of (e^{-x} I_0(x))^d in 1/x.
    let s = [1.0, 1.0 / 8.0, 9.0 / 128.0, 225.0 / 3072.0, 11025.0 / 98304.0];
    let mut pw = vec![1.0];
    for _ in 0..d {
        let mut next = vec![0.0; (pw.len() + s.len() - 1).min(s.len())];
        for (i, a) in pw.iter().enumerate() {
            for (j, b) in s.iter().enumerate() {
                if i + j < next.len() {
                    next[i + j] += a * b;
                }
            }
        }
        pw = next;
    }
    let pref = (df / (2.0 * std::f64::consts::PI)).powf(df / 2.0);
    let tail: f64 = pw
        .iter()
        .enumerate()
        .map(|(j, b)| {
            let e = df / 2.0 + j as f64 - m as f64;
            b * df.powi(j as i32) * pref * cut.powf(-e) / e
        })
        .sum();
    let gamma_m: f64 = (1..m).map(|i| i as f64).product();
    (head + body + tail) / gamma_m
}

/// `∫_{[-π,π]^d} 1/(1 - D̂(k)) dk/(2π)^d` by the midpoint rule on an `n^d`
/// grid (which avoids `k = 0`), using the reflection symmetry in each axis.
fn torus_midpoint(d: u32, n: usize) -> f64 {
    let cos: Vec<f64> = (0..n)
        .map(|i| (std::f64::consts::PI * (i as f64 + 0.5) / n as f64).cos())
        .collect();
    let mut idx = vec![0usize; d as usize];
    let mut sum = 0.0;
    loop {
        let dh: f64 = idx.iter().map(|&i| cos[i]).sum::<f64>() / d as f64;
        sum += 1.0 / (1.0 - dh);
        let mut j = 0;
        loop {
            if j == idx.len() {
                return sum / (n as f64).powi(d as i32);
            }
            idx[j] += 1;
            if idx[j] < n {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

/// Reference integrals for simple random walk on Z^d.
pub fn srw_reference(d: u32, task: SrwTask) -> Result<SrwValue, SeriesError> {
    if d == 0 {
        return Err(SeriesError::Precondition("d must be >= 1".into()));
    }
    let m = match task {
        SrwTask::ReturnIntegral | SrwTask::GreenValue => 1,
        SrwTask::IntersectionIntegral => 2,
    };
    if d <= 2 * m {
        return Ok(SrwValue::Divergent);
    }
    let (coarse, fine) = match task {
        SrwTask::GreenValue => {
            if d > 4 {
                return Err(SeriesError::Quadrature(
                    "tensor-product quadrature is capped at d <= 4".into(),
                ));
            }
            // The singular part of the error is O(h^{d-2}); one Richardson step.
            let n = if d == 3 { 96 } else { 40 };
            let p = (d - 2) as i32;
            let a = torus_midpoint(d, n);
            let b = torus_midpoint(d, 2 * n);
            let r = 2f64.powi(p);
            (b, (r * b - a) / (r - 1.0))
        }
        _ => (bessel_representation(d, m, 200), bessel_representation(d, m, 400)),
    };
    if !fine.is_finite() {
        return Err(SeriesError::Quadrature("non-finite result".into()));
    }
    Ok(SrwValue::Value {
        value: fine,
        error: (fine - coarse).abs().max(fine.abs() * 1e-15),
    })
}

fn box_sites(spec: &LatticeSpec, half_width: i32) -> BTreeSet<Point> {
    let d = spec.dim() as usize;
    let mut out = BTreeSet::new();
    let mut cur = vec![-half_width; d];
    loop {
        out.insert(cur.clone());
        let mut j = 0;
        loop {
            if j == d {
                return out;
            }
            cur[j] += 1;
            if cur[j] <= half_width {
                break;
            }
            cur[j] = -half_width;
            j += 1;
        }
    }
}

/// `∂D = {x ∉ D : x ∼ y for some y ∈ D}`.
pub fn outer_boundary(
    spec: &LatticeSpec,
    domain: &BTreeSet<Point>,
) -> Result<BTreeSet<Point>, SeriesError> {
    let steps = step_set(spec)?;
    let mut out = BTreeSet::new();
    for y in domain {
        for s in &steps {
            let x: Point = y.iter().zip(s).map(|(a, b)| a + b).collect();
            if !domain.contains(&x) {
                out.insert(x);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct SimonLiebReport {
    pub half_width: i32,
    pub x: Point,
    pub y: Point,
    /// `[z^n] (G(x,y) - G_D(x,y))`.
    pub lhs: Vec<String>,
    /// `[z^n] Σ_{w ∈ ∂D} G_{D̄}(x,w) G(w,y)`.
    pub rhs: Vec<String>,
    /// `[z^n] G_D(x,y)`.
    pub restricted: Vec<String>,
    pub holds: bool,
}

/// Coefficientwise check of `G(x,y) - G_D(x,y) <= Σ_{w ∈ ∂D} G_{D̄}(x,w) G(w,y)`
/// for `D = [-half_width, half_width]^d`.
pub fn simon_lieb_check(
    spec: &LatticeSpec,
    lambda: &BigRational,
    half_width: i32,
    x: &[i32],
    y: &[i32],
    n_max: usize,
    cfg: &EngineConfig,
) -> Result<SimonLiebReport, SeriesError> {
    let full = count_walks(spec, n_max, lambda, true, cfg)?;
    let g = |a: &[i32], b: &[i32]| -> SeriesTrunc {
        let diff: Point = b.iter().zip(a).map(|(p, q)| p - q).collect();
        SeriesTrunc::new(
            full.by_endpoint
                .iter()
                .map(|m| m.get(&diff).cloned().unwrap_or_else(BigRational::zero))
                .collect(),
        )
    };
    let domain = box_sites(spec, half_width);
    let boundary = outer_boundary(spec, &domain)?;
    let closure: BTreeSet<Point> = domain.union(&boundary).cloned().collect();
    let restricted = if domain.contains(x) {
        SeriesTrunc::new(count_restricted(spec, n_max, lambda, &domain, x, y, cfg)?)
    } else {
        SeriesTrunc::zero(n_max)
    };
    let lhs = &g(x, y) - &restricted;
    let mut rhs = SeriesTrunc::zero(n_max);
    if closure.contains(x) {
        for w in &boundary {
            let gd = SeriesTrunc::new(count_restricted(spec, n_max, lambda, &closure, x, w, cfg)?);
            rhs = &rhs + &(&gd * &g(w, y));
        }
    }
    let holds = lhs.coeffs.iter().zip(&rhs.coeffs).all(|(l, r)| l <= r);
    Ok(SimonLiebReport {
        half_width,
        x: x.to_vec(),
        y: y.to_vec(),
        lhs: lhs.to_strings(),
        rhs: rhs.to_strings(),
        restricted: restricted.to_strings(),
        holds,
    })
}

/// Self-avoiding walk counts on the discrete torus `(Z / side Z)^d`.
pub fn torus_counts(
    spec: &LatticeSpec,
    side: i32,
    n_max: usize,
) -> Result<Vec<BigUint>, SeriesError> {
    let range = spec.range() as i32;
    if side < 2 * range + 1 {
        return Err(SeriesError::Precondition(format!(
            "torus side must be >= {}",
            2 * range + 1
        )));
    }
    let steps = step_set(spec)?;
    let mut counts = vec![0u64; n_max + 1];
    let mut seen: HashSet<Point> = HashSet::from([spec.origin()]);
    fn go(
        steps: &[Point],
        side: i32,
        n_max: usize,
        cur: &Point,
        k: usize,
        seen: &mut HashSet<Point>,
        counts: &mut [u64],
    ) {
        counts[k] += 1;
        if k == n_max {
            return;
        }
        for s in steps {
            let next: Point = cur
                .iter()
                .zip(s)
                .map(|(a, b)| (a + b).rem_euclid(side))
                .collect();
            if seen.insert(next.clone()) {
                go(steps, side, n_max, &next, k + 1, seen, counts);
                seen.remove(&next);
            }
        }
    }
    go(&steps, side, n_max, &spec.origin(), 0, &mut seen, &mut counts);
    Ok(counts.into_iter().map(BigUint::from).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive,
}

fn verdict(lhs_lo: f64, lhs_hi: f64, rhs_lo: f64, rhs_hi: f64) -> Verdict {
    if lhs_hi <= rhs_lo {
        Verdict::Holds
    } else if lhs_lo > rhs_hi {
        Verdict::Violated
    } else {
        Verdict::Inconclusive
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundSide {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub name: String,
    pub lhs: BoundSide,
    pub rhs: BoundSide,
    /// `rhs - lhs` on the truncations alone.
    pub truncated_margin: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagrammaticReport {
    pub z: String,
    pub m_max: usize,
    pub h_sup: BoundSide,
    pub gh_sup: BoundSide,
    pub checks: Vec<BoundCheck>,
    /// `Σ_x (1 - cos k·x) π_m^(1)(x)` at `cos k_j = 1/3`, every `m`.
    pub cos_identity_zero: bool,
}

fn up(x: f64) -> f64 {
    x * (1.0 + 1e-12)
}

fn down(x: f64) -> f64 {
    x * (1.0 - 1e-12)
}

fn rf(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Evaluated checks of `Σ_x Π^(1)_z(x) <= z|Ω| ‖H_z‖_∞` and
/// `Σ_x Π^(2)_z(x) <= ‖H_z‖_∞ ‖G_z * H_z‖_∞` with truncation tails.
pub fn diagrammatic_bound_check(
    spec: &LatticeSpec,
    z: &BigRational,
    m_max: usize,
    cfg: &EngineConfig,
) -> Result<DiagrammaticReport, SeriesError> {
    check_guard(spec, z)?;
    if z.is_negative() {
        return Err(SeriesError::Precondition("z must be >= 0".into()));
    }
    let deg = spec.degree() as i64;
    let c = count_saws(spec, m_max, true, cfg)?;
    let table: Vec<PointMap> = c.by_endpoint.iter().map(int_map).collect();
    let pi = pi_via_laces(spec, m_max, 2, cfg)?;
    let zp: Vec<BigRational> = (0..=2 * m_max).map(|n| num_traits::pow(z.clone(), n)).collect();

    // Truncated H(x), G*H(x) and their tails.
    let mut h: BTreeMap<Point, BigRational> = BTreeMap::new();
    for (n, t) in table.iter().enumerate().skip(1) {
        for (x, v) in t {
            *h.entry(x.clone()).or_insert_with(BigRational::zero) += rat(v.clone()) * &zp[n];
        }
    }
    let h_tail = rf(&geometric_tail(spec, z, m_max));
    let h_max = h.values().map(rf).fold(0.0, f64::max);
    let h_sup = BoundSide {
        lower: down(h_max),
        upper: up(h_max + h_tail),
    };
    let mut gh: BTreeMap<Point, BigRational> = BTreeMap::new();
    for i in 0..=m_max {
        for j in 1..=m_max - i {
            for (a, va) in &table[i] {
                for (b, vb) in &table[j] {
                    let x: Point = a.iter().zip(b).map(|(p, q)| p + q).collect();
                    *gh.entry(x).or_insert_with(BigRational::zero) +=
                        rat(va * vb) * &zp[i + j];
                }
            }
        }
    }
    let gh_max = gh.values().map(rf).fold(0.0, f64::max);
    let chi_trunc: BigRational = c.totals.iter().zip(&zp).map(|(v, p)| rat(v.clone()) * p).sum();
    let chi_up = rf(&chi_trunc) + h_tail;
    let mut within = BigRational::zero();
    for i in 0..=m_max {
        for j in 1..=m_max - i {
            within += rat(&c.totals[i] * &c.totals[j]) * &zp[i + j];
        }
    }
    let gh_tail = (chi_up * (chi_up - 1.0) - rf(&within)).max(0.0);
    let gh_sup = BoundSide {
        lower: down(gh_max),
        upper: up(gh_max + gh_tail),
    };

    let mut checks = Vec::new();
    // N = 1.
    let pi1: BigRational = (1..=m_max)
        .map(|m| rat(pi.pi_hat_n(1)[m].clone()) * &zp[m])
        .sum();
    let zf = rf(z);
    let pi1_tail = zf * deg as f64 * h_tail;
    let l1 = BoundSide {
        lower: down(rf(&pi1)),
        upper: up(rf(&pi1) + pi1_tail),
    };
    let r1 = BoundSide {
        lower: down(zf * deg as f64 * h_sup.lower),
        upper: up(zf * deg as f64 * h_sup.upper),
    };
    checks.push(BoundCheck {
        name: "N=1".into(),
        truncated_margin: zf * deg as f64 * h_max - rf(&pi1),
        verdict: verdict(l1.lower, l1.upper, r1.lower, r1.upper),
        lhs: l1,
        rhs: r1,
    });
    // N = 2; tail from Σ_x π_m^(2)(x) <= C(m-1,2) |Ω|^3 (|Ω|-1)^{m-3}.
    let pi2: BigRational = (1..=m_max)
        .map(|m| rat(pi.pi_hat_n(2)[m].clone()) * &zp[m])
        .sum();
    let b = (deg - 1) as f64;
    let mut pi2_tail = 0.0;
    let mut m = m_max + 1;
    loop {
        let mf = m as f64;
        let term = (mf - 1.0) * (mf - 2.0) / 2.0
            * (deg as f64).powi(3)
            * b.powi(m as i32 - 3)
            * zf.powi(m as i32);
        let ratio = mf / (mf - 2.0) * b * zf;
        if ratio < 0.5 && term < 1e-30 {
            pi2_tail += term * ratio / (1.0 - ratio);
            break;
        }
        pi2_tail += term;
        m += 1;
        if m > 100_000 {
            pi2_tail = f64::INFINITY;
            break;
        }
    }
    let l2 = BoundSide {
        lower: down(rf(&pi2)),
        upper: up(rf(&pi2) + pi2_tail),
    };
    let r2 = BoundSide {
        lower: down(h_sup.lower * gh_sup.lower),
        upper: up(h_sup.upper * gh_sup.upper),
    };
    checks.push(BoundCheck {
        name: "N=2".into(),
        truncated_margin: h_max * gh_max - rf(&pi2),
        verdict: verdict(l2.lower, l2.upper, r2.lower, r2.upper),
        lhs: l2,
        rhs: r2,
    });

    let third = BigRational::new(1.into(), 3.into());
    let cosines = vec![third; spec.dim() as usize];
    let cos_identity_zero = (1..=m_max).all(|m| {
        let t = pi.by_n.get(&(m, 1)).cloned().unwrap_or_default();
        let total: BigInt = t.values().sum();
        (rat(total) - cosine_transform(&t, &cosines)).is_zero()
    });
    Ok(DiagrammaticReport {
        z: z.to_string(),
        m_max,
        h_sup,
        gh_sup,
        checks,
        cos_identity_zero,
    })
}
