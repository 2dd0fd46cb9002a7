//! Brjuno sums and fast-growing subsequences of best-approximation denominators.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use super::{
    continued_fraction, torus_norm, torus_norm_exact, BestApproxSequence, CfStop,
    DiophantineError, Frequency,
};
use crate::real::{ln_bigint, ln_ratio, Hp, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BrjunoClass {
    BrjunoLikely,
    NonBrjunoLikely,
    Undecided,
}

impl BrjunoClass {
    pub fn label(&self) -> &'static str {
        match self {
            BrjunoClass::BrjunoLikely => "brjuno-likely",
            BrjunoClass::NonBrjunoLikely => "non-brjuno-likely",
            BrjunoClass::Undecided => "undecided",
        }
    }
}

#[derive(Clone, Debug)]
pub struct BrjunoReport {
    /// `ln q_{n+1} / q_n` for consecutive denominators.
    pub increments: Vec<f64>,
    pub partial_sums: Vec<f64>,
    pub classification: BrjunoClass,
    /// Number of partial quotients used.
    pub budget: usize,
    /// True when the expansion ended early (rational input or precision loss).
    pub truncated: bool,
}

/// Finite-budget Brjuno heuristic.
///
/// Non-Brjuno-likely when the last increment exceeds 1, Brjuno-likely when
/// the last three increments are below `1e-3`, undecided otherwise.
pub fn brjuno_report(alpha: &Frequency, budget_terms: usize) -> Result<BrjunoReport, DiophantineError> {
    if budget_terms < 2 {
        return Err(DiophantineError::InvalidArgument("budget must be at least 2".into()));
    }
    let seq = continued_fraction(alpha, budget_terms)?;
    Ok(report_from_sequence(&seq))
}

pub(crate) fn report_from_sequence(seq: &BestApproxSequence) -> BrjunoReport {
    let qs = seq.all_denominators();
    let increments: Vec<f64> = qs
        .windows(2)
        .map(|w| ln_bigint(&w[1]) / w[0].to_f64().unwrap_or(f64::INFINITY))
        .collect();
    let mut partial_sums = Vec::with_capacity(increments.len());
    let mut acc = 0.0;
    for inc in &increments {
        acc += inc;
        partial_sums.push(acc);
    }
    let truncated = matches!(seq.stop, CfStop::RationalExhausted | CfStop::PrecisionExhausted);
    let classification = if truncated {
        BrjunoClass::Undecided
    } else if increments.last().is_some_and(|x| *x > 1.0) {
        BrjunoClass::NonBrjunoLikely
    } else if increments.len() >= 3 && increments[increments.len() - 3..].iter().all(|x| *x < 1e-3) {
        BrjunoClass::BrjunoLikely
    } else {
        BrjunoClass::Undecided
    };
    BrjunoReport {
        increments,
        partial_sums,
        classification,
        budget: seq.partial_quotients.len(),
        truncated,
    }
}

/// Greedy subsequence with `q_{n_{j+1}} ≥ H^{q_{n_j}}`.
#[derive(Clone, Debug)]
pub struct Subsequence {
    /// Positions in the sequence's denominator list.
    pub indices: Vec<usize>,
    pub denominators: Vec<BigInt>,
    /// Whether `‖q_{n_j} α‖ < exp(−q_{n_j}/j²)` holds, with `j` counted from 1.
    pub certificates: Vec<bool>,
}

/// `ln ‖q α‖_𝕋`, or `-inf` when `q α` is an integer.
fn ln_torus_norm_multiple(alpha: &Frequency, q: &BigInt) -> f64 {
    match alpha.exact_form() {
        Some(x) if x.is_rational() => {
            let v = torus_norm_exact(&(x.as_rational().unwrap() * BigRational::from_integer(q.clone())));
            if v == BigRational::from_integer(0.into()) {
                f64::NEG_INFINITY
            } else {
                ln_ratio(&v)
            }
        }
        Some(x) => {
            let v = x.scale(&BigRational::from_integer(q.clone())).torus_norm();
            let h: Hp = v.to_hp();
            let f = h.to_f64();
            if f > 0.0 {
                f.ln()
            } else {
                f64::NEG_INFINITY
            }
        }
        None => {
            let qf = q.to_f64().unwrap_or(f64::INFINITY);
            torus_norm(alpha.value() * qf).ln()
        }
    }
}

fn at_least_power(next: &BigInt, h: f64, q: &BigInt) -> bool {
    // exact when H is a small integer and the power fits comfortably
    if h.fract() == 0.0 && h >= 2.0 && h < 1e15 {
        let bits_needed = q.to_f64().unwrap_or(f64::INFINITY) * h.log2();
        if bits_needed < 1e6 {
            let e = q.to_u32().expect("small exponent");
            return *next >= num_traits::pow(BigInt::from(h as u64), e as usize);
        }
    }
    ln_bigint(next) >= q.to_f64().unwrap_or(f64::INFINITY) * h.ln()
}

pub fn non_brjuno_subsequence(seq: &BestApproxSequence, h: f64) -> Result<Subsequence, DiophantineError> {
    if h <= 1.0 {
        return Err(DiophantineError::InvalidArgument("H must exceed 1".into()));
    }
    let qs = &seq.denominators;
    if qs.len() < 2 {
        return Err(DiophantineError::SequenceTooShort { h });
    }
    let mut indices = vec![0usize];
    let mut cur = 0usize;
    for (i, q) in qs.iter().enumerate().skip(1) {
        if at_least_power(q, h, &qs[cur]) {
            indices.push(i);
            cur = i;
        }
    }
    if indices.len() < 2 {
        return Err(DiophantineError::SequenceTooShort { h });
    }
    let denominators: Vec<BigInt> = indices.iter().map(|i| qs[*i].clone()).collect();
    let certificates = denominators
        .iter()
        .enumerate()
        .map(|(j, q)| {
            let j = (j + 1) as f64;
            ln_torus_norm_multiple(&seq.alpha, q) < -q.to_f64().unwrap_or(f64::INFINITY) / (j * j)
        })
        .collect();
    Ok(Subsequence {
        indices,
        denominators,
        certificates,
    })
}
