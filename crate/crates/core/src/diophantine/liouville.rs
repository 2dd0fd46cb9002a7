//! Liouville-type vectors built from rapidly growing denominators, and the
//! super-Liouville score `n⁻¹ aⁿ ln ‖nω‖`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{
    torus_norm2_f64, torus_norm2_sq_exact, DiophantineError, Frequency, FrequencyRecord,
    QuadraticValue, Vector2,
};
use crate::real::{ln_bigint, ln_ratio, Hp, Real};

/// Multiplier `m(q)` with `q_{j+1} = q_j · m(q_j)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Growth {
    /// `q + 1`
    PlusOne,
    /// `2^q`
    Pow2,
    /// `q^q`
    SelfPow,
    /// A constant factor.
    Times(u64),
}

impl Growth {
    fn multiplier(&self, q: &BigInt, cap_bits: u64) -> Result<BigInt, DiophantineError> {
        let too_big = |bits: f64| {
            if bits > cap_bits as f64 {
                Err(DiophantineError::CapExceeded { bits: bits as u64 })
            } else {
                Ok(())
            }
        };
        match self {
            Growth::PlusOne => Ok(q + 1),
            Growth::Times(k) => Ok(BigInt::from(*k)),
            Growth::Pow2 => {
                too_big(q.to_f64().unwrap_or(f64::INFINITY))?;
                Ok(BigInt::one() << q.to_usize().expect("within cap"))
            }
            Growth::SelfPow => {
                too_big(q.to_f64().unwrap_or(f64::INFINITY) * q.bits() as f64)?;
                Ok(num_traits::pow(q.clone(), q.to_usize().expect("within cap")))
            }
        }
    }

    /// `ln m(q)`, valid far beyond the cap.
    pub fn ln_multiplier(&self, q: &BigInt) -> f64 {
        let qf = q.to_f64().unwrap_or(f64::INFINITY);
        match self {
            Growth::PlusOne => ln_bigint(&(q + 1)),
            Growth::Times(k) => (*k as f64).ln(),
            Growth::Pow2 => qf * std::f64::consts::LN_2,
            Growth::SelfPow => qf * ln_bigint(q),
        }
    }
}

impl fmt::Display for Growth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Growth::PlusOne => write!(f, "q+1"),
            Growth::Pow2 => write!(f, "2^q"),
            Growth::SelfPow => write!(f, "q^q"),
            Growth::Times(k) => write!(f, "{k}*q"),
        }
    }
}

impl FromStr for Growth {
    type Err = DiophantineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        match t.as_str() {
            "q+1" => Ok(Growth::PlusOne),
            "2^q" => Ok(Growth::Pow2),
            "q^q" => Ok(Growth::SelfPow),
            _ => t
                .strip_suffix("*q")
                .and_then(|k| k.parse::<u64>().ok())
                .filter(|k| *k >= 2)
                .map(Growth::Times)
                .ok_or_else(|| DiophantineError::Parse {
                    pos: 0,
                    msg: format!("unknown growth `{s}`"),
                }),
        }
    }
}

/// `ω = (Σ 1/q_i, Σ (−1)^{i+1}/q_i)` truncated after `q_{s+1}`.
#[derive(Clone, Debug)]
pub struct LiouvilleVector {
    pub growth: Growth,
    /// `q_1, …, q_{s+1}`
    pub denominators: Vec<BigInt>,
    pub omega: [BigRational; 2],
    /// `ln` of a bound on the distance from the truncation to the infinite sum.
    pub ln_tail_bound: f64,
    /// `‖q_j ω‖_{𝕋²} ≤ 2/m(q_j)` for `j = 1..=s`, checked exactly.
    pub guarantees: Vec<bool>,
}

impl LiouvilleVector {
    pub fn stages(&self) -> usize {
        self.denominators.len() - 1
    }

    pub fn vector(&self) -> Vector2 {
        Vector2::rational(self.omega[0].clone(), self.omega[1].clone())
    }

    pub fn records(&self) -> [FrequencyRecord; 2] {
        let rec = |v: &BigRational| FrequencyRecord::LiouvillePartial {
            value: v.to_string(),
            growth: self.growth.to_string(),
            stages: self.stages(),
        };
        [rec(&self.omega[0]), rec(&self.omega[1])]
    }
}

pub fn build_liouville_vector(
    growth: Growth,
    q1: u64,
    stages: usize,
    cap_bits: u64,
) -> Result<LiouvilleVector, DiophantineError> {
    if stages == 0 {
        return Err(DiophantineError::NoStages);
    }
    if q1 < 2 {
        return Err(DiophantineError::InvalidArgument("q1 must be at least 2".into()));
    }
    let mut qs = vec![BigInt::from(q1)];
    let mut multipliers = Vec::new();
    for _ in 0..stages {
        let q = qs.last().expect("nonempty");
        let m = growth.multiplier(q, cap_bits)?;
        let next = q * &m;
        if next.bits() > cap_bits {
            return Err(DiophantineError::CapExceeded { bits: next.bits() });
        }
        multipliers.push(m);
        qs.push(next);
    }
    let mut omega = [BigRational::zero(), BigRational::zero()];
    for (i, q) in qs.iter().enumerate() {
        let t = BigRational::new(BigInt::one(), q.clone());
        omega[0] += &t;
        if i % 2 == 0 {
            omega[1] += &t;
        } else {
            omega[1] -= &t;
        }
    }
    let guarantees = qs[..stages]
        .iter()
        .zip(&multipliers)
        .map(|(q, m)| {
            let qr = BigRational::from_integer(q.clone());
            let d2 = torus_norm2_sq_exact(&[&omega[0] * &qr, &omega[1] * &qr]);
            let bound = BigRational::new(BigInt::from(2), m.clone());
            d2 <= &bound * &bound
        })
        .collect();
    // the omitted terms sum to at most 2/q_{s+2} per coordinate
    let last = qs.last().expect("nonempty");
    let ln_tail_bound = 1.5 * std::f64::consts::LN_2 - ln_bigint(last) - growth.ln_multiplier(last);
    Ok(LiouvilleVector {
        growth,
        denominators: qs,
        omega,
        ln_tail_bound,
        guarantees,
    })
}

/// `ln ‖nω‖_{𝕋²}`, `None` when `nω ∈ ℤ²`.
fn ln_norm_multiple(omega: &Vector2, n: &BigInt) -> Option<f64> {
    let nr = BigRational::from_integer(n.clone());
    if let Some(w) = omega.exact_rationals() {
        let d2 = torus_norm2_sq_exact(&[&w[0] * &nr, &w[1] * &nr]);
        if d2.is_zero() {
            return None;
        }
        return Some(0.5 * ln_ratio(&d2));
    }
    if let Some(w) = omega.exact_forms() {
        let folded: Vec<Hp> = w
            .iter()
            .map(|x: &QuadraticValue| {
                let s = x.scale(&nr);
                s.add_rational(&-BigRational::from_integer(s.round())).to_hp()
            })
            .collect();
        let d = folded[0].hypot(&folded[1]);
        let f = d.to_f64();
        if f == 0.0 {
            return None;
        }
        return Some(f.ln());
    }
    let nf = n.to_f64()?;
    let v = omega.values();
    let d = torus_norm2_f64([v[0] * nf, v[1] * nf]);
    if d == 0.0 {
        None
    } else {
        Some(d.ln())
    }
}

/// `n⁻¹ aⁿ ln ‖nω‖_{𝕋²}` at a single, possibly huge, `n`.
pub fn super_liouville_score_at(omega: &Vector2, n: &BigInt, holder_a: f64) -> Result<f64, DiophantineError> {
    if !(holder_a > 0.0 && holder_a <= 1.0) {
        return Err(DiophantineError::InvalidArgument("Hölder exponent must lie in (0, 1]".into()));
    }
    if !n.is_positive() {
        return Err(DiophantineError::InvalidArgument("n must be positive".into()));
    }
    let ln = ln_norm_multiple(omega, n).ok_or_else(|| DiophantineError::RationalDirection {
        n: n.to_u64().unwrap_or(u64::MAX),
    })?;
    // evaluated in log space so aⁿ cannot underflow before the product
    let nf = n.to_f64().unwrap_or(f64::INFINITY);
    let log_mag = nf * holder_a.ln() - ln_bigint(n) + (-ln).ln();
    Ok(-log_mag.exp())
}

/// Scores for `n = 1..=n_max`.
pub fn super_liouville_score(
    omega: &Vector2,
    n_max: u64,
    holder_a: f64,
) -> Result<Vec<(u64, f64)>, DiophantineError> {
    if n_max == 0 {
        return Err(DiophantineError::InvalidArgument("n_max must be at least 1".into()));
    }
    (1..=n_max)
        .map(|n| super_liouville_score_at(omega, &BigInt::from(n), holder_a).map(|s| (n, s)))
        .collect()
}

impl From<&LiouvilleVector> for Vector2 {
    fn from(v: &LiouvilleVector) -> Self {
        Vector2::new(Frequency::rational(v.omega[0].clone()), Frequency::rational(v.omega[1].clone()))
    }
}
