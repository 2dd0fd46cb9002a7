//! Rational relations, SL(2,ℤ) normalisation and character frequencies.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::{DiophantineError, QuadraticValue, Vector2};

/// `c·ω₁ + d·ω₂ + p/q = 0` with `gcd(c,d) = gcd(p,q) = 1` and `q > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalRelation {
    pub c: i64,
    pub d: i64,
    pub p: i64,
    pub q: i64,
}

impl RationalRelation {
    pub fn new(c: i64, d: i64, p: i64, q: i64) -> Result<Self, DiophantineError> {
        if c == 0 && d == 0 {
            return Err(DiophantineError::InvalidArgument("(c, d) must be nonzero".into()));
        }
        if c.gcd(&d) != 1 {
            return Err(DiophantineError::NotCoprime { c, d });
        }
        if q <= 0 {
            return Err(DiophantineError::InvalidArgument("q must be positive".into()));
        }
        if p.gcd(&q) != 1 {
            return Err(DiophantineError::InvalidArgument(format!("gcd({p}, {q}) != 1")));
        }
        Ok(RationalRelation { c, d, p, q })
    }

    fn from_rationals(c: &BigRational, d: &BigRational, e: &BigRational) -> Option<Self> {
        // scale (c, d) to coprime integers, then e along with it
        let lcm = c.denom().lcm(d.denom());
        let ci = (c * BigRational::from_integer(lcm.clone())).to_integer();
        let di = (d * BigRational::from_integer(lcm.clone())).to_integer();
        let g = ci.gcd(&di);
        let scale = BigRational::new(lcm, g.clone());
        let e = e * scale;
        let (ci, di) = (ci / &g, di / &g);
        Self::new(
            ci.to_i64()?,
            di.to_i64()?,
            e.numer().to_i64()?,
            e.denom().to_i64()?,
        )
        .ok()
    }

    /// Exact value of `c·ω₁ + d·ω₂ + p/q`, or `None` when the components live
    /// in different quadratic fields.
    pub fn residual(&self, w: &[QuadraticValue; 2]) -> Option<QuadraticValue> {
        let c = BigRational::from_integer(self.c.into());
        let d = BigRational::from_integer(self.d.into());
        w[0].scale(&c)
            .checked_add(&w[1].scale(&d))
            .map(|s| s.add_rational(&BigRational::new(self.p.into(), self.q.into())))
    }
}

/// Solves `a·d − b·c = 1` and returns the completion whose top row is minimal
/// in its coset `(a, b) + ℤ(c, d)`: smallest `max(|a|,|b|)`, then `|a|+|b|`,
/// then lexicographically.
pub fn sl2z_complete(c: i64, d: i64) -> Result<[[i64; 2]; 2], DiophantineError> {
    let (cc, dd) = (c as i128, d as i128);
    let eg = cc.extended_gcd(&dd);
    if eg.gcd != 1 {
        if eg.gcd == -1 {
            // sign convention of extended_gcd; flip the Bezout pair
            return complete_from(-eg.y, eg.x, cc, dd);
        }
        return Err(DiophantineError::NotCoprime { c, d });
    }
    // eg.x·c + eg.y·d = 1, so (a, b) = (eg.y, −eg.x)
    complete_from(eg.y, -eg.x, cc, dd)
}

fn complete_from(a: i128, b: i128, c: i128, d: i128) -> Result<[[i64; 2]; 2], DiophantineError> {
    debug_assert_eq!(a * d - b * c, 1);
    let key = |k: i128| {
        let (x, y) = (a + k * c, b + k * d);
        (x.abs().max(y.abs()), x.abs() + y.abs(), x, y)
    };
    let mut points = vec![0i128];
    let mut push_ratio = |num: i128, den: i128| {
        if den != 0 {
            let f = Integer::div_floor(&num, &den);
            points.extend([f - 1, f, f + 1, f + 2]);
        }
    };
    push_ratio(-a, c);
    push_ratio(-b, d);
    push_ratio(-(a - b), c - d);
    push_ratio(-(a + b), c + d);
    let best = points.into_iter().map(key).min().expect("candidates");
    let (_, _, x, y) = best;
    let to = |v: i128| {
        i64::try_from(v).map_err(|_| DiophantineError::InvalidArgument("entry overflow".into()))
    };
    Ok([[to(x)?, to(y)?], [to(c)?, to(d)?]])
}

#[derive(Clone, Debug, PartialEq)]
pub struct CharacterData {
    pub relation: RationalRelation,
    /// `(d, −c)` and its negative.
    pub character_vectors: [[i64; 2]; 2],
    pub character_number: i64,
    pub matrix: [[i64; 2]; 2],
    /// `q·(a·ω₁ + b·ω₂)`
    pub alpha_prime: QuadraticValue,
    /// `‖α'‖_𝕋`
    pub beta: QuadraticValue,
    pub power: u64,
}

impl CharacterData {
    pub fn beta_f64(&self) -> f64 {
        self.beta.to_f64()
    }
}

fn alpha_prime(w: &[QuadraticValue; 2], a: i64, b: i64, q: i64) -> Option<QuadraticValue> {
    let s = w[0]
        .scale(&BigRational::from_integer(a.into()))
        .checked_add(&w[1].scale(&BigRational::from_integer(b.into())))?;
    Some(s.scale(&BigRational::from_integer(q.into())))
}

/// Character data of a semi-irrational vector with respect to an exact relation.
pub fn character_data(
    omega: &Vector2,
    relation: &RationalRelation,
    ell: u64,
) -> Result<CharacterData, DiophantineError> {
    if ell == 0 {
        return Err(DiophantineError::InvalidArgument("ell must be at least 1".into()));
    }
    let w = omega
        .exact_forms()
        .ok_or(DiophantineError::ExactFormRequired("character data needs exact components"))?;
    if w[0].is_rational() && w[1].is_rational() {
        return Err(DiophantineError::RationalVector);
    }
    let rel = RationalRelation::new(relation.c, relation.d, relation.p, relation.q)?;
    match rel.residual(&w) {
        Some(r) if r.is_zero() => {}
        Some(r) => {
            return Err(DiophantineError::RelationViolated(format!("residual {r}")));
        }
        None => {
            return Err(DiophantineError::RelationViolated(
                "components lie in different quadratic fields".into(),
            ))
        }
    }
    let m = sl2z_complete(rel.c, rel.d)?;
    let ap = alpha_prime(&w, m[0][0], m[0][1], rel.q).expect("common field");
    let beta = ap.torus_norm();
    Ok(CharacterData {
        relation: rel,
        character_vectors: [[rel.d, -rel.c], [-rel.d, rel.c]],
        character_number: rel.q,
        matrix: m,
        alpha_prime: ap,
        beta,
        power: ell * rel.q as u64,
    })
}

/// `β` recomputed from the completion of `(−c, −d)`, i.e. for `(−A, −v)`.
pub fn beta_negated(omega: &Vector2, data: &CharacterData) -> Option<QuadraticValue> {
    let w = omega.exact_forms()?;
    let r = &data.relation;
    let m = sl2z_complete(-r.c, -r.d).ok()?;
    Some(alpha_prime(&w, m[0][0], m[0][1], r.q)?.torus_norm())
}

#[derive(Clone, Debug, PartialEq)]
pub enum VectorClass {
    Rational,
    SemiIrrational(RationalRelation),
    TotallyIrrational,
    /// No exact form, so no verdict.
    Undetermined,
}

impl VectorClass {
    pub fn label(&self) -> &'static str {
        match self {
            VectorClass::Rational => "rational vector",
            VectorClass::SemiIrrational(_) => "semi-irrational",
            VectorClass::TotallyIrrational => "totally irrational",
            VectorClass::Undetermined => "undetermined",
        }
    }
}

/// Classification of `(ω₁, ω₂, 1)` by rational dependence, from exact forms.
pub fn classify(omega: &Vector2) -> VectorClass {
    let Some(w) = omega.exact_forms() else {
        return VectorClass::Undetermined;
    };
    let one = BigRational::from_integer(BigInt::from(1));
    let zero = BigRational::zero();
    let relation = match (w[0].is_rational(), w[1].is_rational()) {
        (true, true) => return VectorClass::Rational,
        (false, true) => RationalRelation::from_rationals(&zero, &one, &-w[1].a().clone()),
        (true, false) => RationalRelation::from_rationals(&one, &zero, &-w[0].a().clone()),
        (false, false) if w[0].k() == w[1].k() => {
            // c·b₁ + d·b₂ = 0 leaves only rational parts
            let (c, d) = (w[1].b().clone(), -w[0].b().clone());
            let e = -(&c * w[0].a() + &d * w[1].a());
            RationalRelation::from_rationals(&c, &d, &e)
        }
        _ => return VectorClass::TotallyIrrational,
    };
    match relation {
        Some(r) => VectorClass::SemiIrrational(r),
        None => VectorClass::Undetermined,
    }
}

impl RationalRelation {
    pub fn holds_on(&self, omega: &Vector2) -> bool {
        omega
            .exact_forms()
            .and_then(|w| self.residual(&w))
            .is_some_and(|r| r.is_zero())
    }

    pub fn is_normalised(&self) -> bool {
        self.q.is_positive() && self.c.gcd(&self.d) == 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diophantine::Frequency;

    #[test]
    fn completions() {
        assert_eq!(sl2z_complete(0, 1).unwrap(), [[1, 0], [0, 1]]);
        assert_eq!(sl2z_complete(2, 3).unwrap(), [[1, 1], [2, 3]]);
        assert_eq!(sl2z_complete(1, -1).unwrap(), [[-1, 0], [1, -1]]);
        assert!(matches!(sl2z_complete(2, 4), Err(DiophantineError::NotCoprime { .. })));
        for c in -12i64..=12 {
            for d in -12i64..=12 {
                if c.gcd(&d) != 1 {
                    continue;
                }
                let m = sl2z_complete(c, d).unwrap();
                assert_eq!(m[0][0] * m[1][1] - m[0][1] * m[1][0], 1);
                assert_eq!(m[1], [c, d]);
                // no coset member has a smaller max-norm
                let cur = m[0][0].abs().max(m[0][1].abs());
                for k in -30i64..=30 {
                    let (x, y) = (m[0][0] + k * c, m[0][1] + k * d);
                    assert!(x.abs().max(y.abs()) >= cur);
                }
            }
        }
    }

    #[test]
    fn character_of_sqrt2_half() {
        let w = Vector2::new(Frequency::sqrt2_minus_1(), Frequency::ratio(1, 2));
        let rel = RationalRelation::new(0, 1, -1, 2).unwrap();
        let cd = character_data(&w, &rel, 3).unwrap();
        assert_eq!(cd.character_vectors, [[1, 0], [-1, 0]]);
        assert_eq!(cd.character_number, 2);
        assert_eq!(cd.matrix, [[1, 0], [0, 1]]);
        assert!((cd.beta_f64() - (3.0 - 2.0 * 2f64.sqrt())).abs() < 1e-15);
        assert_eq!(cd.power, 6);
        assert_eq!(beta_negated(&w, &cd).unwrap(), cd.beta);
    }

    #[test]
    fn character_of_shifted_pair() {
        let s = Frequency::sqrt2_minus_1();
        let s2 = Frequency::exact(s.exact_form().unwrap().add_rational(&BigRational::new(1.into(), 3.into())));
        let w = Vector2::new(s, s2);
        let rel = RationalRelation::new(1, -1, 1, 3).unwrap();
        let cd = character_data(&w, &rel, 1).unwrap();
        assert_eq!(cd.character_vectors[0], [-1, -1]);
        let m = cd.matrix;
        assert_eq!(m[0][0] * m[1][1] - m[0][1] * m[1][0], 1);
        assert_eq!(beta_negated(&w, &cd).unwrap(), cd.beta);
        let bad = RationalRelation::new(1, -1, 1, 5).unwrap();
        assert!(matches!(character_data(&w, &bad, 1), Err(DiophantineError::RelationViolated(_))));
    }

    #[test]
    fn rational_vector_rejected() {
        let w = Vector2::new(Frequency::ratio(1, 3), Frequency::ratio(1, 5));
        let rel = RationalRelation::new(0, 1, -1, 5).unwrap();
        assert_eq!(character_data(&w, &rel, 1), Err(DiophantineError::RationalVector));
    }

    #[test]
    fn classification() {
        let half = Frequency::ratio(1, 2);
        assert_eq!(classify(&Vector2::new(half.clone(), half.clone())), VectorClass::Rational);
        let w = Vector2::new(Frequency::sqrt2_minus_1(), half);
        match classify(&w) {
            VectorClass::SemiIrrational(r) => assert!(r.holds_on(&w)),
            other => panic!("{other:?}"),
        }
        let g = Vector2::new(Frequency::golden(), Frequency::sqrt2_minus_1());
        assert_eq!(classify(&g), VectorClass::TotallyIrrational);
        let same = Vector2::new(
            Frequency::sqrt2_minus_1(),
            Frequency::exact(QuadraticValue::new(
                BigRational::new(1.into(), 7.into()),
                BigRational::new(3.into(), 1.into()),
                2,
            )),
        );
        match classify(&same) {
            VectorClass::SemiIrrational(r) => {
                assert!(r.holds_on(&same));
                assert_eq!((r.c, r.d), (3, -1));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(classify(&Vector2::from_f64(0.1, 0.2)), VectorClass::Undetermined);
    }
}
