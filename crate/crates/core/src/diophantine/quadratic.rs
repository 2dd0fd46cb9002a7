//! Exact numbers of the form `a + b·√k` with rational `a`, `b`.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::real::{Hp, Real};

/// `a + b·√k`. `k` is square-free and at least 2 whenever `b != 0`; rationals
/// are stored with `b = 0` and `k = 1`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QuadraticValue {
    a: BigRational,
    b: BigRational,
    k: u64,
}

fn square_free(k: u64) -> (u64, u64) {
    // returns (s, r) with k = s² r and r square-free
    let mut s = 1u64;
    let mut r = k;
    let mut d = 2u64;
    while d.saturating_mul(d) <= r {
        while r % (d * d) == 0 {
            r /= d * d;
            s *= d;
        }
        d += 1;
    }
    (s, r)
}

impl QuadraticValue {
    pub fn rational(a: BigRational) -> Self {
        QuadraticValue {
            a,
            b: BigRational::zero(),
            k: 1,
        }
    }

    pub fn integer(n: i64) -> Self {
        Self::rational(BigRational::from_integer(n.into()))
    }

    /// `a + b·√k`, normalised so that `k` is square-free.
    pub fn new(a: BigRational, b: BigRational, k: u64) -> Self {
        if b.is_zero() || k == 0 {
            return Self::rational(a);
        }
        let (s, r) = square_free(k);
        let b = b * BigRational::from_integer(s.into());
        if r == 1 {
            return Self::rational(a + b);
        }
        QuadraticValue { a, b, k: r }
    }

    pub fn sqrt(k: u64) -> Self {
        Self::new(BigRational::zero(), BigRational::one(), k)
    }

    pub fn a(&self) -> &BigRational {
        &self.a
    }

    pub fn b(&self) -> &BigRational {
        &self.b
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        if self.is_rational() {
            Some(&self.a)
        } else {
            None
        }
    }

    fn common_k(&self, other: &Self) -> Option<u64> {
        match (self.is_rational(), other.is_rational()) {
            (true, true) => Some(1),
            (false, true) => Some(self.k),
            (true, false) => Some(other.k),
            (false, false) if self.k == other.k => Some(self.k),
            _ => None,
        }
    }

    /// Sum; `None` when the two live in different quadratic fields.
    pub fn checked_add(&self, other: &Self) -> Option<Self> {
        let k = self.common_k(other)?;
        Some(Self::new(&self.a + &other.a, &self.b + &other.b, k))
    }

    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        self.checked_add(&other.neg())
    }

    pub fn checked_mul(&self, other: &Self) -> Option<Self> {
        let k = self.common_k(other)?;
        let kr = BigRational::from_integer(k.into());
        let a = &self.a * &other.a + &self.b * &other.b * kr;
        let b = &self.a * &other.b + &self.b * &other.a;
        Some(Self::new(a, b, k))
    }

    pub fn checked_div(&self, other: &Self) -> Option<Self> {
        self.checked_mul(&other.recip()?)
    }

    pub fn neg(&self) -> Self {
        QuadraticValue {
            a: -self.a.clone(),
            b: -self.b.clone(),
            k: self.k,
        }
    }

    pub fn add_rational(&self, r: &BigRational) -> Self {
        QuadraticValue {
            a: &self.a + r,
            b: self.b.clone(),
            k: self.k,
        }
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        Self::new(&self.a * r, &self.b * r, self.k)
    }

    /// `1/(a + b√k) = (a − b√k)/(a² − b²k)`; `None` for zero.
    pub fn recip(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let norm = &self.a * &self.a - &self.b * &self.b * BigRational::from_integer(self.k.into());
        Some(Self::new(&self.a / &norm, -(&self.b / &norm), self.k))
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    /// Exact sign.
    pub fn signum(&self) -> Ordering {
        let sa = self.a.cmp(&BigRational::zero());
        let sb = self.b.cmp(&BigRational::zero());
        if sb == Ordering::Equal {
            return sa;
        }
        if sa == Ordering::Equal || sa == sb {
            return sb;
        }
        let a2 = &self.a * &self.a;
        let b2k = &self.b * &self.b * BigRational::from_integer(self.k.into());
        if a2 > b2k {
            sa
        } else {
            sb
        }
    }

    pub fn cmp_value(&self, other: &Self) -> Option<Ordering> {
        Some(self.checked_sub(other)?.signum())
    }

    pub fn abs(&self) -> Self {
        if self.signum() == Ordering::Less {
            self.neg()
        } else {
            self.clone()
        }
    }

    pub fn to_hp(&self) -> Hp {
        let a = Hp::from_ratio(&self.a);
        if self.is_rational() {
            return a;
        }
        a + Hp::from_ratio(&self.b) * Hp::from_f64(self.k as f64).sqrt()
    }

    pub fn to_f64(&self) -> f64 {
        if let Some(r) = self.as_rational() {
            return crate::real::ratio_to_f64(r);
        }
        self.to_hp().to_f64()
    }

    /// Exact floor.
    pub fn floor(&self) -> BigInt {
        if let Some(r) = self.as_rational() {
            return r.floor().to_integer();
        }
        let mut n = self.to_hp().to_ratio().floor().to_integer();
        loop {
            let below = self.add_rational(&-BigRational::from_integer(n.clone()));
            if below.signum() == Ordering::Less {
                n -= 1;
                continue;
            }
            let above = self.add_rational(&-BigRational::from_integer(&n + 1));
            if above.signum() != Ordering::Less {
                n += 1;
                continue;
            }
            return n;
        }
    }

    /// Nearest integer, ties rounded up.
    pub fn round(&self) -> BigInt {
        self.add_rational(&BigRational::new(1.into(), 2.into())).floor()
    }

    /// `‖x‖_𝕋`, exact.
    pub fn torus_norm(&self) -> Self {
        self.add_rational(&-BigRational::from_integer(self.round())).abs()
    }
}

impl fmt::Debug for QuadraticValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for QuadraticValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_rational() {
            return write!(f, "{}", self.a);
        }
        if !self.a.is_zero() {
            write!(f, "{}", self.a)?;
            if self.b.is_positive() {
                write!(f, "+")?;
            }
        }
        if self.b.is_one() {
            write!(f, "sqrt{}", self.k)
        } else if (-self.b.clone()).is_one() {
            write!(f, "-sqrt{}", self.k)
        } else {
            write!(f, "{}*sqrt{}", self.b, self.k)
        }
    }
}
