//! Continued fractions and best-approximation denominators.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::{DiophantineError, Frequency, QuadraticValue, DEFAULT_CAP_BITS};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CfStop {
    /// All requested terms were produced.
    Complete,
    /// The input is rational and its expansion ended.
    RationalExhausted,
    /// A floating input cannot resolve the next quotient.
    PrecisionExhausted,
    /// The next denominator would exceed the big-integer cap.
    CapReached,
}

#[derive(Clone, Debug)]
pub struct CfOptions {
    pub max_terms: usize,
    pub cap_bits: u64,
}

/// Denominators of the best rational approximations of `alpha`.
///
/// `denominators` is strictly increasing; a repeated leading `1` (when the
/// first partial quotient is `1`) is dropped together with its numerator.
#[derive(Clone, Debug)]
pub struct BestApproxSequence {
    pub alpha: Frequency,
    pub integer_part: BigInt,
    pub partial_quotients: Vec<BigInt>,
    pub denominators: Vec<BigInt>,
    pub numerators: Vec<BigInt>,
    /// Denominator following the last listed one, when known.
    pub next_denominator: Option<BigInt>,
    pub stop: CfStop,
}

impl BestApproxSequence {
    /// Listed denominators followed by the next one, if any.
    pub fn all_denominators(&self) -> Vec<BigInt> {
        let mut v = self.denominators.clone();
        if let Some(n) = &self.next_denominator {
            v.push(n.clone());
        }
        v
    }
}

enum Source {
    Exact(QuadraticValue),
    Float(BigRational),
}

impl Source {
    fn floor(&self) -> BigInt {
        match self {
            Source::Exact(q) => q.floor(),
            Source::Float(r) => r.floor().to_integer(),
        }
    }

    fn sub_int(&self, n: &BigInt) -> Source {
        let n = BigRational::from_integer(n.clone());
        match self {
            Source::Exact(q) => Source::Exact(q.add_rational(&-n)),
            Source::Float(r) => Source::Float(r - n),
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            Source::Exact(q) => q.is_zero(),
            Source::Float(r) => r.is_zero(),
        }
    }

    fn recip(&self) -> Source {
        match self {
            Source::Exact(q) => Source::Exact(q.recip().expect("nonzero")),
            Source::Float(r) => Source::Float(r.recip()),
        }
    }

    fn approx(&self) -> f64 {
        match self {
            Source::Exact(q) => q.to_f64(),
            Source::Float(r) => r.to_f64().unwrap_or(0.0),
        }
    }
}

pub fn continued_fraction(
    alpha: &Frequency,
    max_terms: usize,
) -> Result<BestApproxSequence, DiophantineError> {
    continued_fraction_with(
        alpha,
        &CfOptions {
            max_terms,
            cap_bits: DEFAULT_CAP_BITS,
        },
    )
}

/// Expands `alpha` into at most `max_terms` partial quotients.
///
/// Exact inputs are expanded exactly. A floating input is expanded as the
/// dyadic rational it stores, stopping once the fractional remainder drops
/// below `1e-12·q_n²`, where rounding of the input dominates.
pub fn continued_fraction_with(
    alpha: &Frequency,
    opts: &CfOptions,
) -> Result<BestApproxSequence, DiophantineError> {
    if opts.max_terms == 0 {
        return Err(DiophantineError::InvalidArgument(
            "max_terms must be at least 1".into(),
        ));
    }
    let mut x = match alpha.exact_form() {
        Some(q) => Source::Exact(q.clone()),
        None => Source::Float(BigRational::from_float(alpha.value()).ok_or_else(|| {
            DiophantineError::InvalidArgument("frequency is not finite".into())
        })?),
    };
    let is_float = matches!(x, Source::Float(_));

    let a0 = x.floor();
    x = x.sub_int(&a0);
    let (mut p_prev, mut q_prev) = (BigInt::one(), BigInt::zero());
    let (mut p, mut q) = (a0.clone(), BigInt::one());
    let mut quotients = Vec::new();
    let mut qs = vec![q.clone()];
    let mut ps = vec![p.clone()];
    let mut stop = CfStop::Complete;

    while quotients.len() < opts.max_terms {
        if x.is_zero() {
            stop = CfStop::RationalExhausted;
            break;
        }
        if is_float {
            let qf = q.to_f64().unwrap_or(f64::INFINITY);
            if x.approx() < 1e-12 * qf * qf {
                stop = CfStop::PrecisionExhausted;
                break;
            }
        }
        let inv = x.recip();
        let a = inv.floor();
        let q_next = &a * &q + &q_prev;
        if q_next.bits() > opts.cap_bits {
            stop = CfStop::CapReached;
            break;
        }
        let p_next = &a * &p + &p_prev;
        x = inv.sub_int(&a);
        quotients.push(a);
        p_prev = std::mem::replace(&mut p, p_next);
        q_prev = std::mem::replace(&mut q, q_next);
        qs.push(q.clone());
        ps.push(p.clone());
    }
    if stop == CfStop::Complete && x.is_zero() {
        stop = CfStop::RationalExhausted;
    }

    // qs holds q_0..q_N. The last one is listed only when the expansion ended,
    // since it is then the exact denominator of alpha.
    let next = if stop == CfStop::RationalExhausted {
        None
    } else {
        ps.pop();
        qs.pop()
    };
    if qs.len() >= 2 && qs[0] == qs[1] {
        qs.remove(0);
        ps.remove(0);
    }
    Ok(BestApproxSequence {
        alpha: alpha.clone(),
        integer_part: a0,
        partial_quotients: quotients,
        denominators: qs,
        numerators: ps,
        next_denominator: next,
        stop,
    })
}
