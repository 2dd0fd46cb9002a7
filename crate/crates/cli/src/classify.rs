use std::fmt::Write as _;

use num_bigint::BigInt;
use pseudorot::diophantine::{
    brjuno_report, character_data, classify, continued_fraction, parse_frequency, parse_vector,
    build_liouville_vector, super_liouville_score_at, DiophantineError, Frequency, Growth, RationalRelation,
    Vector2, VectorClass, DEFAULT_CAP_BITS,
};
use pseudorot::real::ln_bigint;

use crate::config::RunConfig;
use crate::maps::input;
use crate::{ClassifyArgs, CliError};

fn diophantine(e: DiophantineError) -> CliError {
    match e {
        DiophantineError::CapExceeded { .. } => CliError::Budget(e.to_string()),
        e => CliError::Input(e.to_string()),
    }
}

pub fn run(a: &ClassifyArgs, cfg: &RunConfig) -> Result<(), CliError> {
    let cf_terms = a.cf_terms.unwrap_or(cfg.cf_terms);
    let score_terms = a.score_terms.unwrap_or(cfg.score_terms);
    if cf_terms < 2 || score_terms == 0 {
        return Err(CliError::Input("cf-terms must be at least 2 and score-terms positive".into()));
    }
    let mut out = String::new();
    if let Some(spec) = &a.liouville {
        liouville(spec, &mut out)?;
    } else {
        let spec = a.omega.as_deref().expect("clap enforces one input");
        if spec.contains(',') {
            let v = parse_vector(spec).map_err(diophantine)?;
            vector(&v, a.relation.as_deref(), cf_terms, score_terms, &mut out)?;
        } else {
            if a.relation.is_some() {
                return Err(CliError::Input("--relation needs a vector `x,y`".into()));
            }
            let f = parse_frequency(spec).map_err(diophantine)?;
            let _ = writeln!(out, "frequency: {:.17}", f.value());
            frequency(&f, "alpha", cf_terms, &mut out)?;
        }
    }
    print!("{out}");
    Ok(())
}

fn frequency(f: &Frequency, label: &str, terms: usize, out: &mut String) -> Result<(), CliError> {
    let cf = continued_fraction(f, terms).map_err(diophantine)?;
    let quotients: Vec<String> = cf.partial_quotients.iter().map(|a| a.to_string()).collect();
    let _ = writeln!(out, "[{label}] continued fraction: [{}; {}] ({:?})", cf.integer_part, quotients.join(", "), cf.stop);
    let _ = writeln!(out, "k,p_k,q_k");
    for (k, (p, q)) in cf.numerators.iter().zip(&cf.denominators).enumerate() {
        let _ = writeln!(out, "{k},{p},{q}");
    }
    if f.as_rational().is_none() {
        let b = brjuno_report(f, terms).map_err(diophantine)?;
        let _ = writeln!(
            out,
            "[{label}] brjuno: {} (partial sum {:.6e} over {} increments{})",
            b.classification.label(),
            b.partial_sums.last().copied().unwrap_or(0.0),
            b.increments.len(),
            if b.truncated { ", truncated" } else { "" }
        );
    }
    Ok(())
}

fn parse_relation(s: &str) -> Result<RationalRelation, CliError> {
    let parts: Vec<i64> = s
        .split(',')
        .map(|t| t.trim().parse::<i64>().map_err(|_| CliError::Input(format!("bad relation `{s}`"))))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [c, d, p, q] => RationalRelation::new(c, d, p, q).map_err(diophantine),
        _ => Err(CliError::Input("relation needs four integers c,d,p,q".into())),
    }
}

fn vector(v: &Vector2, relation: Option<&str>, cf_terms: usize, score_terms: usize, out: &mut String) -> Result<(), CliError> {
    let vals = v.values();
    let _ = writeln!(out, "omega: ({:.17}, {:.17})", vals[0], vals[1]);
    let class = classify(v);
    match &class {
        VectorClass::SemiIrrational(r) => {
            let _ = writeln!(out, "class: {} ({}·w1 + {}·w2 + {}/{} = 0)", class.label(), r.c, r.d, r.p, r.q);
        }
        _ => {
            let _ = writeln!(out, "class: {}", class.label());
        }
    }
    for (i, f) in v.components.iter().enumerate() {
        frequency(f, &format!("w{}", i + 1), cf_terms, out)?;
    }
    let rel = match (relation, &class) {
        (Some(s), _) => Some(parse_relation(s)?),
        (None, VectorClass::SemiIrrational(r)) => Some(*r),
        _ => None,
    };
    if let Some(r) = rel {
        let d = character_data(v, &r, 1).map_err(diophantine)?;
        let _ = writeln!(out, "character number: {}", d.character_number);
        let _ = writeln!(
            out,
            "character vectors: ({}, {}), ({}, {})",
            d.character_vectors[0][0], d.character_vectors[0][1], d.character_vectors[1][0], d.character_vectors[1][1]
        );
        let _ = writeln!(out, "normalising matrix: {:?}", d.matrix);
        let _ = writeln!(out, "character frequency: {} = {:.17}", d.beta, d.beta_f64());
    }
    let _ = writeln!(out, "n,super_liouville_score");
    for n in 1..=score_terms as u64 {
        match super_liouville_score_at(v, &BigInt::from(n), 1.0) {
            Ok(s) => {
                let _ = writeln!(out, "{n},{s:.6e}");
            }
            Err(DiophantineError::RationalDirection { .. }) => {
                let _ = writeln!(out, "{n},-inf");
            }
            Err(e) => return Err(diophantine(e)),
        }
    }
    Ok(())
}

fn liouville(spec: &str, out: &mut String) -> Result<(), CliError> {
    let (mut growth, mut stages, mut q1) = (None, None, 2u64);
    for part in spec.split(',') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("expected key=value, got `{part}`")))?;
        match k.trim() {
            "growth" => growth = Some(v.parse::<Growth>().map_err(diophantine)?),
            "stages" => stages = Some(v.trim().parse::<usize>().map_err(input)?),
            "q1" => q1 = v.trim().parse().map_err(input)?,
            other => return Err(CliError::Input(format!("unknown key `{other}`"))),
        }
    }
    let growth = growth.ok_or_else(|| CliError::Input("growth is required".into()))?;
    let stages = stages.ok_or_else(|| CliError::Input("stages is required".into()))?;
    let lv = build_liouville_vector(growth, q1, stages, DEFAULT_CAP_BITS).map_err(diophantine)?;
    let v = lv.vector();
    let _ = writeln!(out, "growth: {}", lv.growth);
    let _ = writeln!(out, "omega: ({:.17}, {:.17})", v.values()[0], v.values()[1]);
    let _ = writeln!(out, "ln tail bound: {:.6e}", lv.ln_tail_bound);
    let _ = writeln!(out, "j,q_j,ln_q_j,guarantee,score");
    for (j, q) in lv.denominators.iter().enumerate().take(lv.stages()) {
        let score = super_liouville_score_at(&v, q, 1.0).map_err(diophantine)?;
        let short = if q.bits() > 64 { format!("~e{:.1}", ln_bigint(q) / std::f64::consts::LN_10) } else { q.to_string() };
        let _ = writeln!(out, "{},{},{:.6e},{},{:.6e}", j + 1, short, ln_bigint(q), lv.guarantees[j], score);
    }
    Ok(())
}
