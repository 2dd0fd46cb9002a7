//! Scalars used for map evaluation.
//!
//! `f64` is the fast path. [`Hp`] is a 512-bit binary float for the
//! construction engine, where bump widths drop far below `f64` resolution.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::OnceLock;

use astro_float_num::{BigFloat, Consts, RoundingMode, Sign};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub trait Real:
    Clone
    + Send
    + Sync
    + fmt::Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    fn from_ratio(r: &BigRational) -> Self;
    /// Cached conversion of an exact constant.
    fn from_exact(e: &Exact) -> Self;
    fn to_f64(&self) -> f64;
    /// Exact value of the stored binary number.
    fn to_ratio(&self) -> BigRational;
    fn floor(&self) -> Self;
    fn exp(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn abs(&self) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn one() -> Self {
        Self::from_f64(1.0)
    }

    fn round(&self) -> Self {
        (self.clone() + Self::from_f64(0.5)).floor()
    }

    fn hypot(&self, other: &Self) -> Self {
        (self.clone() * self.clone() + other.clone() * other.clone()).sqrt()
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl Real for f64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }

    fn from_ratio(r: &BigRational) -> Self {
        ratio_to_f64(r)
    }

    #[inline]
    fn from_exact(e: &Exact) -> Self {
        e.approx
    }

    #[inline]
    fn to_f64(&self) -> f64 {
        *self
    }

    fn to_ratio(&self) -> BigRational {
        BigRational::from_float(*self).expect("finite value")
    }

    #[inline]
    fn floor(&self) -> Self {
        f64::floor(*self)
    }

    #[inline]
    fn exp(&self) -> Self {
        f64::exp(*self)
    }

    #[inline]
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }

    #[inline]
    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    #[inline]
    fn round(&self) -> Self {
        (*self + 0.5).floor()
    }

    #[inline]
    fn hypot(&self, other: &Self) -> Self {
        f64::hypot(*self, *other)
    }
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// An exact rational constant together with its cached images in each scalar type.
#[derive(Clone)]
pub struct Exact {
    value: BigRational,
    approx: f64,
    hp: OnceLock<Hp>,
}

impl Exact {
    pub fn new(value: BigRational) -> Self {
        let approx = ratio_to_f64(&value);
        Exact {
            value,
            approx,
            hp: OnceLock::new(),
        }
    }

    pub fn from_int(n: BigInt) -> Self {
        Exact::new(BigRational::from_integer(n))
    }

    pub fn value(&self) -> &BigRational {
        &self.value
    }

    pub fn approx(&self) -> f64 {
        self.approx
    }

    pub fn get<R: Real>(&self) -> R {
        R::from_exact(self)
    }
}

impl PartialEq for Exact {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}

impl fmt::Debug for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

pub const HP_BITS: usize = 512;
const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constant cache"));
}

/// 512-bit binary floating point number.
#[derive(Clone)]
pub struct Hp(BigFloat);

impl Hp {
    pub fn from_bigint(n: &BigInt) -> Hp {
        if n.is_zero() {
            return Hp(BigFloat::from_u8(0, HP_BITS));
        }
        let words = n.magnitude().to_u64_digits();
        let sign = if n.is_negative() { Sign::Neg } else { Sign::Pos };
        let e = (words.len() * 64) as i32;
        Hp(BigFloat::from_words(&words, sign, e))
    }

    pub fn is_finite(&self) -> bool {
        !(self.0.is_nan() || self.0.is_inf())
    }
}

impl Real for Hp {
    fn from_f64(x: f64) -> Self {
        Hp(BigFloat::from_f64(x, HP_BITS))
    }

    fn from_ratio(r: &BigRational) -> Self {
        let n = Hp::from_bigint(r.numer());
        if r.denom().is_one() {
            return n;
        }
        n / Hp::from_bigint(r.denom())
    }

    fn from_exact(e: &Exact) -> Self {
        e.hp.get_or_init(|| Hp::from_ratio(&e.value)).clone()
    }

    fn to_f64(&self) -> f64 {
        match self.0.as_raw_parts() {
            None => {
                if self.0.is_inf_pos() {
                    f64::INFINITY
                } else if self.0.is_inf_neg() {
                    f64::NEG_INFINITY
                } else {
                    f64::NAN
                }
            }
            Some((m, _, s, e, _)) => {
                let len = m.len();
                if len == 0 || m[len - 1] == 0 {
                    return 0.0;
                }
                let hi = m[len - 1] as f64;
                let lo = if len > 1 { m[len - 2] as f64 } else { 0.0 };
                let v = ldexp(hi + ldexp(lo, -64), e as i64 - 64);
                if s == Sign::Neg {
                    -v
                } else {
                    v
                }
            }
        }
    }

    fn to_ratio(&self) -> BigRational {
        let (m, _, s, e, _) = self.0.as_raw_parts().expect("finite value");
        if m.iter().all(|w| *w == 0) {
            return BigRational::zero();
        }
        let mut digits = Vec::with_capacity(2 * m.len());
        for w in m {
            digits.push(*w as u32);
            digits.push((*w >> 32) as u32);
        }
        let mag = BigInt::from(BigUint::new(digits));
        let mag = if s == Sign::Neg { -mag } else { mag };
        let shift = e as i64 - 64 * m.len() as i64;
        if shift >= 0 {
            BigRational::from_integer(mag << shift as usize)
        } else {
            BigRational::new(mag, BigInt::one() << (-shift) as usize)
        }
    }

    fn floor(&self) -> Self {
        Hp(self.0.floor())
    }

    fn exp(&self) -> Self {
        CONSTS.with(|cc| Hp(self.0.exp(HP_BITS, RM, &mut cc.borrow_mut())))
    }

    fn sqrt(&self) -> Self {
        Hp(self.0.sqrt(HP_BITS, RM))
    }

    fn abs(&self) -> Self {
        Hp(self.0.abs())
    }
}

fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

impl fmt::Debug for Hp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hp({:e})", self.to_f64())
    }
}

impl PartialEq for Hp {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl PartialOrd for Hp {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

impl Add for Hp {
    type Output = Hp;
    fn add(self, rhs: Hp) -> Hp {
        Hp(self.0.add(&rhs.0, HP_BITS, RM))
    }
}

impl Sub for Hp {
    type Output = Hp;
    fn sub(self, rhs: Hp) -> Hp {
        Hp(self.0.sub(&rhs.0, HP_BITS, RM))
    }
}

impl Mul for Hp {
    type Output = Hp;
    fn mul(self, rhs: Hp) -> Hp {
        Hp(self.0.mul(&rhs.0, HP_BITS, RM))
    }
}

impl Div for Hp {
    type Output = Hp;
    fn div(self, rhs: Hp) -> Hp {
        Hp(self.0.div(&rhs.0, HP_BITS, RM))
    }
}

impl Neg for Hp {
    type Output = Hp;
    fn neg(self) -> Hp {
        Hp(self.0.neg())
    }
}

/// Natural log of a positive big integer, accurate for any size.
pub fn ln_bigint(n: &BigInt) -> f64 {
    assert!(n.is_positive(), "logarithm of a non-positive integer");
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().expect("finite").ln();
    }
    let shift = bits - 64;
    let top = (n >> shift as usize).to_f64().expect("finite");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural log of a positive rational, accurate for any size.
pub fn ln_ratio(r: &BigRational) -> f64 {
    ln_bigint(r.numer()) - ln_bigint(r.denom())
}
