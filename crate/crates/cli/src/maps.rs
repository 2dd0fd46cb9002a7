use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use pseudorot::anosovkatok::conjugated_power;
use pseudorot::diophantine::{parse_rational, parse_vector};
use pseudorot::real::ratio_to_f64;
use pseudorot::rotation::{deviation_series, estimate_rotation_vector};
use pseudorot::torusmap::{map_from_value, read_map};
use pseudorot::AreaPreservingMap;

use crate::config::RunConfig;
use crate::{CliError, MapArgs};

/// Largest power built by repeating generators.
const MAX_PLAIN_POWER: u64 = 100_000;

pub struct Target {
    pub map: AreaPreservingMap,
    /// Known rotation vector and where it came from.
    pub omega: Option<([f64; 2], &'static str)>,
}

pub fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

pub fn parse_pair(s: &str) -> Result<[f64; 2], CliError> {
    parse_vector(s).map(|v| v.values()).map_err(input)
}

pub fn load_map(path: &std::path::Path) -> Result<pseudorot::torusmap::MapDocument, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    read_map(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn metadata_omega(meta: &serde_json::Value) -> Option<[BigRational; 2]> {
    let arr = meta.get("omega")?.as_array()?;
    if arr.len() != 2 {
        return None;
    }
    Some([parse_rational(arr[0].as_str()?)?, parse_rational(arr[1].as_str()?)?])
}

/// The map of `args`, raised to `--power`, with its rotation vector.
pub fn load(args: &MapArgs) -> Result<Target, CliError> {
    let doc = load_map(&args.map)?;
    let meta = doc.metadata.unwrap_or(serde_json::Value::Null);
    let power = match &args.power {
        Some(p) => {
            let m: BigInt = p.trim().parse().map_err(|_| CliError::Input(format!("bad power `{p}`")))?;
            if m < BigInt::one() {
                return Err(CliError::Input("power must be positive".into()));
            }
            Some(m)
        }
        None => None,
    };
    let exact = metadata_omega(&meta);
    let conj = match meta.get("conjugacy") {
        Some(v) => Some(map_from_value(v.clone()).map_err(input)?),
        None => None,
    };
    let (map, omega) = match (&power, &exact, conj) {
        (None, w, _) => (doc.map, w.as_ref().map(|w| [ratio_to_f64(&w[0]), ratio_to_f64(&w[1])])),
        (Some(m), Some(w), Some(h)) => {
            let (map, v) = conjugated_power(&h, w, m);
            (map, Some([ratio_to_f64(&v[0]), ratio_to_f64(&v[1])]))
        }
        (Some(m), w, _) => {
            let k = m
                .to_u64()
                .filter(|k| *k <= MAX_PLAIN_POWER)
                .ok_or_else(|| CliError::Budget(format!("power {m} exceeds {MAX_PLAIN_POWER} for a plain map")))?;
            let scaled = w.as_ref().map(|w| [ratio_to_f64(&w[0]) * k as f64, ratio_to_f64(&w[1]) * k as f64]);
            (doc.map.power(k as usize), scaled)
        }
    };
    let omega = match &args.omega {
        Some(s) => Some((parse_pair(s)?, "flag")),
        None => omega.map(|w| (w, "metadata")),
    };
    Ok(Target { map, omega })
}

impl Target {
    /// The known rotation vector, or an estimate.
    pub fn rotation(&self, cfg: &RunConfig) -> Result<([f64; 2], &'static str), CliError> {
        match self.omega {
            Some(w) => Ok(w),
            None => {
                let est = estimate_rotation_vector(&self.map, cfg.samples, cfg.iterations).map_err(input)?;
                Ok((est.vector, "estimated"))
            }
        }
    }
}

/// Measured `κ̂` over the configured samples and iterations.
pub fn measure_kappa(map: &AreaPreservingMap, omega: [f64; 2], cfg: &RunConfig) -> f64 {
    deviation_series(map, omega, cfg.samples, cfg.iterations, None).kappa()
}
