//! Real arithmetic at a chosen binary precision: `f64` for 53 bits, astro-float otherwise.

use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};

const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("astro-float constants"));
}

fn with_consts<R>(f: impl FnOnce(&mut Consts) -> R) -> R {
    CONSTS.with(|c| f(&mut c.borrow_mut()))
}

pub trait Real:
    Clone
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_i64(x: i64, bits: usize) -> Self;
    fn from_ratio(x: &BigRational, bits: usize) -> Self;
    fn sqrt(&self) -> Self;
    /// `cos(pi * t)` for rational `t`.
    fn cos_pi(t: &BigRational, bits: usize) -> Self;
    fn sin_pi(t: &BigRational, bits: usize) -> Self;
    fn to_f64(&self) -> f64;
    fn abs(&self) -> Self;
    fn bits(&self) -> usize;
    fn zero(bits: usize) -> Self {
        Self::from_i64(0, bits)
    }
    fn one(bits: usize) -> Self {
        Self::from_i64(1, bits)
    }
}

fn ratio_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

impl Real for f64 {
    fn from_i64(x: i64, _: usize) -> Self {
        x as f64
    }
    fn from_ratio(x: &BigRational, _: usize) -> Self {
        ratio_f64(x)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn cos_pi(t: &BigRational, _: usize) -> Self {
        (std::f64::consts::PI * ratio_f64(&reduce_turn(t))).cos()
    }
    fn sin_pi(t: &BigRational, _: usize) -> Self {
        (std::f64::consts::PI * ratio_f64(&reduce_turn(t))).sin()
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn bits(&self) -> usize {
        53
    }
}

/// Reduces `t` into `(-1, 1]` modulo 2.
fn reduce_turn(t: &BigRational) -> BigRational {
    let two = BigRational::from_integer(2.into());
    let mut r = t % &two;
    if r <= -BigRational::from_integer(1.into()) {
        r += &two;
    } else if r > BigRational::from_integer(1.into()) {
        r -= &two;
    }
    r
}

#[derive(Clone, Debug)]
pub struct Precise {
    pub value: BigFloat,
    pub bits: usize,
}

impl Precise {
    pub fn new(value: BigFloat, bits: usize) -> Self {
        Precise { value, bits }
    }

    pub fn from_bigint(x: &BigInt, bits: usize) -> Self {
        let work = bits.max(x.bits() as usize + 64);
        let v = with_consts(|cc| BigFloat::parse(&x.to_string(), Radix::Dec, work, RM, cc));
        let mut v = v;
        v.set_precision(bits, RM).expect("precision");
        Precise::new(v, bits)
    }

    pub fn pi(bits: usize) -> Self {
        Precise::new(with_consts(|cc| cc.pi(bits, RM)), bits)
    }

    pub fn ln(&self) -> Self {
        Precise::new(with_consts(|cc| self.value.ln(self.bits, RM, cc)), self.bits)
    }

    pub fn exp(&self) -> Self {
        Precise::new(with_consts(|cc| self.value.exp(self.bits, RM, cc)), self.bits)
    }

    pub fn powi(&self, n: usize) -> Self {
        Precise::new(self.value.powi(n, self.bits, RM), self.bits)
    }

    /// Decimal rendering with about `digits` significant digits.
    pub fn to_decimal(&self, digits: usize) -> String {
        let mut v = self.value.clone();
        let bits = (digits as f64 * std::f64::consts::LOG2_10).ceil() as usize + 8;
        if bits < self.bits {
            v.set_precision(bits, RM).expect("precision");
        }
        with_consts(|cc| v.format(Radix::Dec, RM, cc)).unwrap_or_else(|_| "NaN".into())
    }

    pub fn is_negative(&self) -> bool {
        self.value.is_negative()
    }

    pub fn lt(&self, other: &Self) -> bool {
        self.value.cmp(&other.value).is_some_and(|c| c < 0)
    }
}

impl Add for Precise {
    type Output = Precise;
    fn add(self, o: Precise) -> Precise {
        Precise::new(self.value.add(&o.value, self.bits, RM), self.bits)
    }
}

impl Sub for Precise {
    type Output = Precise;
    fn sub(self, o: Precise) -> Precise {
        Precise::new(self.value.sub(&o.value, self.bits, RM), self.bits)
    }
}

impl Mul for Precise {
    type Output = Precise;
    fn mul(self, o: Precise) -> Precise {
        Precise::new(self.value.mul(&o.value, self.bits, RM), self.bits)
    }
}

impl Div for Precise {
    type Output = Precise;
    fn div(self, o: Precise) -> Precise {
        Precise::new(self.value.div(&o.value, self.bits, RM), self.bits)
    }
}

impl Neg for Precise {
    type Output = Precise;
    fn neg(self) -> Precise {
        Precise::new(self.value.neg(), self.bits)
    }
}

impl Real for Precise {
    fn from_i64(x: i64, bits: usize) -> Self {
        Precise::new(BigFloat::from_i64(x, bits.max(64)), bits)
    }

    fn from_ratio(x: &BigRational, bits: usize) -> Self {
        Precise::from_bigint(x.numer(), bits) / Precise::from_bigint(x.denom(), bits)
    }

    fn sqrt(&self) -> Self {
        Precise::new(self.value.sqrt(self.bits, RM), self.bits)
    }

    fn cos_pi(t: &BigRational, bits: usize) -> Self {
        let work = bits + 32;
        let arg = Precise::pi(work) * Precise::from_ratio(&reduce_turn(t), work);
        let mut v = with_consts(|cc| arg.value.cos(work, RM, cc));
        v.set_precision(bits, RM).expect("precision");
        Precise::new(v, bits)
    }

    fn sin_pi(t: &BigRational, bits: usize) -> Self {
        let work = bits + 32;
        let arg = Precise::pi(work) * Precise::from_ratio(&reduce_turn(t), work);
        let mut v = with_consts(|cc| arg.value.sin(work, RM, cc));
        v.set_precision(bits, RM).expect("precision");
        Precise::new(v, bits)
    }

    fn to_f64(&self) -> f64 {
        self.to_decimal(20).parse().unwrap_or(f64::NAN)
    }

    fn abs(&self) -> Self {
        if self.value.is_negative() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn bits(&self) -> usize {
        self.bits
    }
}

/// Absolute value of a rational as a float, for diagnostics.
pub fn rational_abs_f64(x: &BigRational) -> f64 {
    ratio_f64(&x.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> BigRational {
        s.parse().unwrap()
    }

    #[test]
    fn sqrt_two_squared() {
        let two = Precise::from_i64(2, 200);
        let s = two.sqrt();
        let err = (s.clone() * s - two).abs().to_f64();
        assert!(err < 1e-55, "{err}");
        assert!((Precise::from_i64(2, 106).sqrt().to_f64() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn trig_at_rational_turns() {
        for bits in [64, 106, 160] {
            let c = Precise::cos_pi(&r("1/3"), bits).to_f64();
            assert!((c - 0.5).abs() < 1e-15);
            let s = Precise::sin_pi(&r("-7/6"), bits).to_f64();
            assert!((s - 0.5).abs() < 1e-15);
        }
        assert!((f64::cos_pi(&r("5/2"), 53)).abs() < 1e-15);
        let q = Precise::cos_pi(&r("1/4"), 120);
        let half = (q.clone() * q - Precise::from_ratio(&r("1/2"), 120)).abs();
        assert!(half.to_f64() < 1e-34);
    }

    #[test]
    fn big_integers_convert() {
        let x: BigInt = "123456789012345678901234567890".parse().unwrap();
        let p = Precise::from_bigint(&x, 128);
        assert!(p.to_decimal(30).starts_with("1.23456789012345678901234567"));
        let q = Precise::from_ratio(&r("1/3"), 100);
        assert!((q.to_f64() - 1.0 / 3.0).abs() < 1e-16);
    }
}
