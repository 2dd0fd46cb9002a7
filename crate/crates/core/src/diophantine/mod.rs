//! Arithmetic of rotation vectors: continued fractions, Brjuno sums,
//! Liouville constructions and character data of semi-irrational vectors.

mod brjuno;
mod character;
mod contfrac;
mod liouville;
mod parse;
mod quadratic;

pub use brjuno::{brjuno_report, non_brjuno_subsequence, BrjunoClass, BrjunoReport, Subsequence};
pub use character::{
    beta_negated, character_data, classify, sl2z_complete, CharacterData, RationalRelation, VectorClass,
};
pub use contfrac::{
    continued_fraction, continued_fraction_with, BestApproxSequence, CfOptions, CfStop,
};
pub use liouville::{
    build_liouville_vector, super_liouville_score, super_liouville_score_at, Growth,
    LiouvilleVector,
};
pub use parse::{parse_frequency, parse_vector};
pub use quadratic::QuadraticValue;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::real::{ratio_to_f64, Hp, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiophantineError {
    #[error("not coprime: gcd({c}, {d}) != 1")]
    NotCoprime { c: i64, d: i64 },
    #[error("rational vector")]
    RationalVector,
    #[error("relation violated: {0}")]
    RelationViolated(String),
    #[error("exact form required: {0}")]
    ExactFormRequired(&'static str),
    #[error("rational direction: ‖{n}·ω‖ = 0")]
    RationalDirection { n: u64 },
    #[error("at least one stage required")]
    NoStages,
    #[error("big-integer cap exceeded (needs {} bits)", show_bits(*.bits))]
    CapExceeded { bits: u64 },
    #[error("sequence too short for H = {h}")]
    SequenceTooShort { h: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

/// Default size limit for big integers produced by the arithmetic routines.
pub const DEFAULT_CAP_BITS: u64 = 1 << 20;

/// A real frequency with an optional exact form.
#[derive(Clone, Debug, PartialEq)]
pub struct Frequency {
    value: f64,
    exact: Option<QuadraticValue>,
}

impl Frequency {
    pub fn from_f64(value: f64) -> Self {
        Frequency { value, exact: None }
    }

    pub fn rational(r: BigRational) -> Self {
        Self::exact(QuadraticValue::rational(r))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Self::rational(BigRational::new(n.into(), d.into()))
    }

    pub fn exact(q: QuadraticValue) -> Self {
        Frequency {
            value: q.to_f64(),
            exact: Some(q),
        }
    }

    /// `(√5 − 1)/2`, the fractional part of the golden mean.
    pub fn golden() -> Self {
        let h = BigRational::new(1.into(), 2.into());
        Self::exact(QuadraticValue::new(-h.clone(), h, 5))
    }

    pub fn sqrt2_minus_1() -> Self {
        Self::exact(QuadraticValue::new(
            BigRational::from_integer((-1).into()),
            BigRational::from_integer(1.into()),
            2,
        ))
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn exact_form(&self) -> Option<&QuadraticValue> {
        self.exact.as_ref()
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        self.exact.as_ref().and_then(|q| q.as_rational())
    }

    pub fn to_hp(&self) -> Hp {
        match &self.exact {
            Some(q) => q.to_hp(),
            None => Hp::from_f64(self.value),
        }
    }

    pub fn to_record(&self) -> FrequencyRecord {
        match &self.exact {
            Some(q) if q.is_rational() => FrequencyRecord::Rational {
                value: q.a().to_string(),
            },
            Some(q) => FrequencyRecord::Surd {
                a: q.a().to_string(),
                b: q.b().to_string(),
                k: q.k(),
            },
            None => FrequencyRecord::Float { value: self.value },
        }
    }

    pub fn from_record(rec: &FrequencyRecord) -> Result<Self, DiophantineError> {
        let rat = |s: &str| {
            parse_rational(s).ok_or_else(|| DiophantineError::Parse {
                pos: 0,
                msg: format!("bad rational `{s}`"),
            })
        };
        Ok(match rec {
            FrequencyRecord::Rational { value } => Self::rational(rat(value)?),
            FrequencyRecord::LiouvillePartial { value, .. } => Self::rational(rat(value)?),
            FrequencyRecord::Surd { a, b, k } => {
                Self::exact(QuadraticValue::new(rat(a)?, rat(b)?, *k))
            }
            FrequencyRecord::Float { value } => Self::from_f64(*value),
        })
    }
}

/// Serialised frequency; exact integers are decimal strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FrequencyRecord {
    Rational {
        value: String,
    },
    /// `a + b·√k`
    Surd {
        a: String,
        b: String,
        k: u64,
    },
    Float {
        value: f64,
    },
    LiouvillePartial {
        value: String,
        growth: String,
        stages: usize,
    },
}

fn show_bits(bits: u64) -> String {
    if bits == u64::MAX {
        "more than 2^64".into()
    } else {
        bits.to_string()
    }
}

/// Parses `p/q` or an integer into a rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(BigRational::new(n, d))
            }
        }
        None => Some(BigRational::from_integer(s.parse().ok()?)),
    }
}

/// A vector of two frequencies.
#[derive(Clone, Debug, PartialEq)]
pub struct Vector2 {
    pub components: [Frequency; 2],
}

impl Vector2 {
    pub fn new(a: Frequency, b: Frequency) -> Self {
        Vector2 { components: [a, b] }
    }

    pub fn from_f64(x: f64, y: f64) -> Self {
        Self::new(Frequency::from_f64(x), Frequency::from_f64(y))
    }

    pub fn rational(a: BigRational, b: BigRational) -> Self {
        Self::new(Frequency::rational(a), Frequency::rational(b))
    }

    pub fn values(&self) -> [f64; 2] {
        [self.components[0].value(), self.components[1].value()]
    }

    pub fn exact_rationals(&self) -> Option<[BigRational; 2]> {
        Some([
            self.components[0].as_rational()?.clone(),
            self.components[1].as_rational()?.clone(),
        ])
    }

    pub fn exact_forms(&self) -> Option<[QuadraticValue; 2]> {
        Some([
            self.components[0].exact_form()?.clone(),
            self.components[1].exact_form()?.clone(),
        ])
    }
}

/// `‖α‖_𝕋`, distance to the nearest integer.
pub fn torus_norm(alpha: f64) -> f64 {
    (alpha - alpha.round()).abs()
}

pub fn torus_norm_exact(alpha: &BigRational) -> BigRational {
    let half = BigRational::new(1.into(), 2.into());
    let n = (alpha + half).floor();
    (alpha - n).abs()
}

/// Squared distance from an exact rational vector to `ℤ²`.
pub fn torus_norm2_sq_exact(w: &[BigRational; 2]) -> BigRational {
    let mut best: Option<BigRational> = None;
    let base = [w[0].round(), w[1].round()];
    for i in -1..=1i64 {
        for j in -1..=1i64 {
            let dx = &w[0] - (&base[0] + BigRational::from_integer(i.into()));
            let dy = &w[1] - (&base[1] + BigRational::from_integer(j.into()));
            let d = &dx * &dx + &dy * &dy;
            if best.as_ref().is_none_or(|b| d < *b) {
                best = Some(d);
            }
        }
    }
    best.expect("nine candidates")
}

/// `‖ω‖_{𝕋²}` from floating components, over the nine nearest lattice points.
pub fn torus_norm2_f64(w: [f64; 2]) -> f64 {
    let base = [w[0].round(), w[1].round()];
    let mut best = f64::INFINITY;
    for i in -1..=1 {
        for j in -1..=1 {
            let d = (w[0] - (base[0] + i as f64)).hypot(w[1] - (base[1] + j as f64));
            best = best.min(d);
        }
    }
    best
}

/// `‖ω‖_{𝕋²}`, exact before the final square root when the vector is rational.
pub fn torus_norm2(w: &Vector2) -> f64 {
    if let Some(r) = w.exact_rationals() {
        return ratio_to_f64(&torus_norm2_sq_exact(&r)).sqrt();
    }
    if w.exact_forms().is_some() {
        let x = [w.components[0].to_hp(), w.components[1].to_hp()];
        let base = [x[0].round(), x[1].round()];
        let mut best: Option<Hp> = None;
        for i in -1..=1 {
            for j in -1..=1 {
                let dx = x[0].clone() - (base[0].clone() + Hp::from_f64(i as f64));
                let dy = x[1].clone() - (base[1].clone() + Hp::from_f64(j as f64));
                let d = dx.hypot(&dy);
                if best.as_ref().is_none_or(|b| d < *b) {
                    best = Some(d);
                }
            }
        }
        return best.expect("nine candidates").to_f64();
    }
    torus_norm2_f64(w.values())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_norm_examples() {
        assert_eq!(torus_norm(0.0), 0.0);
        assert_eq!(torus_norm(0.75), 0.25);
        assert!((torus_norm(-3.1) - 0.1).abs() < 1e-12);
        assert_eq!(
            torus_norm_exact(&BigRational::new((-31).into(), 10.into())),
            BigRational::new(1.into(), 10.into())
        );
    }

    #[test]
    fn torus_norm2_examples() {
        assert_eq!(torus_norm2(&Vector2::from_f64(0.0, 0.0)), 0.0);
        let v = torus_norm2(&Vector2::new(Frequency::ratio(2, 5), Frequency::ratio(9, 10)));
        assert!((v - 0.17f64.sqrt()).abs() < 1e-15);
        let h = torus_norm2(&Vector2::from_f64(0.5, 0.5));
        assert!((h - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn lattice_invariance_exact() {
        let w = [
            BigRational::new(13.into(), 37.into()),
            BigRational::new((-5).into(), 11.into()),
        ];
        let base = torus_norm2(&Vector2::rational(w[0].clone(), w[1].clone()));
        for i in -3..=3i64 {
            for j in -3..=3i64 {
                let v = Vector2::rational(
                    &w[0] + BigRational::from_integer(i.into()),
                    &w[1] + BigRational::from_integer(j.into()),
                );
                assert_eq!(torus_norm2(&v), base);
            }
        }
    }

    #[test]
    fn frequency_records_roundtrip() {
        for f in [
            Frequency::ratio(1, 3),
            Frequency::golden(),
            Frequency::from_f64(0.125),
        ] {
            let rec = f.to_record();
            let json = serde_json::to_string(&rec).unwrap();
            let back: FrequencyRecord = serde_json::from_str(&json).unwrap();
            assert_eq!(Frequency::from_record(&back).unwrap(), f);
        }
        let json = r#"{"kind":"rational","value":"1/3"}"#;
        let rec: FrequencyRecord = serde_json::from_str(json).unwrap();
        assert_eq!(Frequency::from_record(&rec).unwrap(), Frequency::ratio(1, 3));
    }

    #[test]
    fn golden_value() {
        let g = Frequency::golden();
        assert!((g.value() - 0.618_033_988_749_894_8).abs() < 1e-15);
    }
}
