//! Periodic profiles built from smooth bumps.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::TorusMapError;
use crate::real::{Exact, Real};

/// `sup |b'|` for `b(t) = exp(1 − 1/(1−t²))`, rounded up.
///
/// The maximum sits at `t ≈ 0.75984` where `b' ≈ −2.17035708571`.
pub const BUMP_DERIVATIVE_MAX: f64 = 2.170_357_09;

/// `b(t) = exp(1 − 1/(1−t²))` on `|t| < 1`, zero outside.
pub fn bump<R: Real>(t: &R) -> R {
    let one = R::one();
    let s = one.clone() - t.clone() * t.clone();
    if s <= R::zero() {
        return R::zero();
    }
    (one.clone() - one / s).exp()
}

/// `b'(t)`.
pub fn bump_derivative<R: Real>(t: &R) -> R {
    let one = R::one();
    let s = one.clone() - t.clone() * t.clone();
    if s <= R::zero() {
        return R::zero();
    }
    let b = (one.clone() - one / s.clone()).exp();
    b * (R::from_f64(-2.0) * t.clone()) / (s.clone() * s)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bump {
    /// Center in `[0, period)`.
    pub center: Exact,
    pub half_width: Exact,
    pub amplitude: Exact,
    /// `half_width · q`
    relative_width: Exact,
}

/// A `1/q`-periodic sum of disjoint bumps `A·b((t − t₀)/w)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicProfile {
    q: BigInt,
    q_exact: Exact,
    period: Exact,
    bumps: Vec<Bump>,
}

impl PeriodicProfile {
    /// Bumps are given as `(center, half_width, amplitude)`; centers are
    /// reduced modulo the period.
    pub fn new(
        q: BigInt,
        bumps: Vec<(BigRational, BigRational, BigRational)>,
    ) -> Result<Self, TorusMapError> {
        if !q.is_positive() {
            return Err(TorusMapError::InvalidProfile("period denominator must be positive".into()));
        }
        let period = BigRational::new(BigInt::one(), q.clone());
        let qr = BigRational::from_integer(q.clone());
        let mut out = Vec::with_capacity(bumps.len());
        for (c, w, a) in bumps {
            if !w.is_positive() {
                return Err(TorusMapError::InvalidProfile("half-width must be positive".into()));
            }
            if &w * BigRational::from_integer(2.into()) >= period {
                return Err(TorusMapError::InvalidProfile(format!(
                    "bump width {} not below period 1/{q}",
                    &w * BigRational::from_integer(2.into())
                )));
            }
            let cq = &c * &qr;
            let c = (&cq - cq.floor()) / &qr;
            out.push(Bump {
                center: Exact::new(c),
                relative_width: Exact::new(&w * &qr),
                half_width: Exact::new(w),
                amplitude: Exact::new(a),
            });
        }
        // disjoint supports on the circle of length `period`
        for i in 0..out.len() {
            for j in i + 1..out.len() {
                let d = (out[i].center.value() - out[j].center.value()).abs();
                let circ = if &d * BigRational::from_integer(2.into()) > period {
                    &period - d
                } else {
                    d
                };
                if circ < out[i].half_width.value() + out[j].half_width.value() {
                    return Err(TorusMapError::InvalidProfile("bump supports overlap".into()));
                }
            }
        }
        Ok(PeriodicProfile {
            q_exact: Exact::from_int(q.clone()),
            period: Exact::new(period),
            q,
            bumps: out,
        })
    }

    /// Convenience constructor from floats, read as their exact binary values.
    pub fn from_f64(q: u64, bumps: &[(f64, f64, f64)]) -> Result<Self, TorusMapError> {
        let conv = |x: f64| {
            BigRational::from_float(x).ok_or_else(|| TorusMapError::InvalidProfile("non-finite parameter".into()))
        };
        let bumps = bumps
            .iter()
            .map(|(c, w, a)| Ok((conv(*c)?, conv(*w)?, conv(*a)?)))
            .collect::<Result<Vec<_>, TorusMapError>>()?;
        Self::new(BigInt::from(q), bumps)
    }

    pub fn q(&self) -> &BigInt {
        &self.q
    }

    pub fn period(&self) -> &BigRational {
        self.period.value()
    }

    pub fn bumps(&self) -> &[Bump] {
        &self.bumps
    }

    pub fn negated(&self) -> Self {
        let mut p = self.clone();
        for b in &mut p.bumps {
            b.amplitude = Exact::new(-b.amplitude.value().clone());
        }
        p
    }

    /// Position of `t` inside bump `b` in units of its half-width, if inside.
    fn locate<R: Real>(&self, b: &Bump, t: &R) -> Option<R> {
        let x = (t.clone() - b.center.get::<R>()) * self.q_exact.get::<R>();
        let x = x.clone() - x.round();
        let z = x / b.relative_width.get::<R>();
        if z.abs() < R::one() {
            Some(z)
        } else {
            None
        }
    }

    pub fn eval<R: Real>(&self, t: &R) -> R {
        let mut acc = R::zero();
        for b in &self.bumps {
            if let Some(z) = self.locate(b, t) {
                acc = acc + b.amplitude.get::<R>() * bump(&z);
            }
        }
        acc
    }

    pub fn derivative<R: Real>(&self, t: &R) -> R {
        let mut acc = R::zero();
        for b in &self.bumps {
            if let Some(z) = self.locate(b, t) {
                acc = acc + b.amplitude.get::<R>() * bump_derivative(&z) / b.half_width.get::<R>();
            }
        }
        acc
    }

    /// `sup |φ| = max |A|`.
    pub fn sup_norm(&self) -> f64 {
        self.bumps
            .iter()
            .map(|b| b.amplitude.approx().abs())
            .fold(0.0, f64::max)
    }

    /// Certified bound on `sup |φ'|`.
    pub fn derivative_bound(&self) -> f64 {
        let m = self
            .bumps
            .iter()
            .map(|b| b.amplitude.approx().abs() / b.half_width.approx())
            .fold(0.0, f64::max);
        m * BUMP_DERIVATIVE_MAX * (1.0 + 1e-12)
    }

    pub fn is_zero(&self) -> bool {
        self.bumps.iter().all(|b| b.amplitude.value().is_zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_peak_and_support() {
        assert_eq!(bump(&0.0), 1.0);
        assert_eq!(bump(&1.0), 0.0);
        assert_eq!(bump(&-1.5), 0.0);
        let mut best: f64 = 0.0;
        for i in 0..200_000 {
            let t = i as f64 / 200_000.0;
            best = best.max(bump_derivative(&t).abs());
        }
        assert!(best <= BUMP_DERIVATIVE_MAX);
        assert!(best > BUMP_DERIVATIVE_MAX - 1e-8);
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let p = PeriodicProfile::from_f64(3, &[(0.1, 0.05, 0.2), (0.25, 0.04, -0.1)]).unwrap();
        for i in 0..1000 {
            let t = i as f64 / 997.0;
            let h = 1e-6;
            let fd = (p.eval(&(t + h)) - p.eval(&(t - h))) / (2.0 * h);
            assert!((fd - p.derivative(&t)).abs() < 1e-5, "{t}");
            assert!(p.derivative(&t).abs() <= p.derivative_bound());
        }
    }

    #[test]
    fn periodic_and_holdout() {
        let p = PeriodicProfile::from_f64(1, &[(0.5, 0.25, 0.1)]).unwrap();
        assert_eq!(p.eval(&0.5), 0.1);
        assert_eq!(p.eval(&1.5), 0.1);
        assert_eq!(p.eval(&0.0), 0.0);
        assert_eq!(p.eval(&0.25), 0.0);
        let p = PeriodicProfile::from_f64(4, &[(0.1, 0.05, 0.3)]).unwrap();
        for i in 0..100 {
            let t = i as f64 * 0.0137;
            assert!((p.eval(&t) - p.eval(&(t + 0.25))).abs() < 1e-14);
        }
    }

    #[test]
    fn invalid_profiles() {
        assert!(PeriodicProfile::from_f64(2, &[(0.1, 0.3, 1.0)]).is_err());
        assert!(PeriodicProfile::from_f64(1, &[(0.1, 0.1, 1.0), (0.25, 0.1, 1.0)]).is_err());
        assert!(PeriodicProfile::from_f64(1, &[(0.05, 0.1, 1.0), (0.9, 0.1, 1.0)]).is_err());
        assert!(PeriodicProfile::from_f64(1, &[(0.1, 0.0, 1.0)]).is_err());
    }
}
