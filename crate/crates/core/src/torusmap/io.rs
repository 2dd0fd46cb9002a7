//! JSON map files.
//!
//! ```json
//! {"schema_version": 1,
//!  "generators": [
//!    {"type": "translation", "v": ["3/10", "7/10"]},
//!    {"type": "shear_x", "profile": {"period": "1/100",
//!      "bumps": [{"center": 0.0025, "half_width": 0.001, "amplitude": 0.01}]}},
//!    {"type": "linear", "matrix": [[1, 1], [0, 1]]}],
//!  "metadata": {}}
//! ```
//!
//! Numbers that are exactly representable as `f64` are written as JSON
//! numbers; other rationals are written as `"p/q"` strings.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::{AreaPreservingMap, Generator, PeriodicProfile, TorusMapError};
use crate::diophantine::parse_rational;
use crate::real::Exact;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum Number {
    Float(f64),
    Text(String),
}

impl Number {
    fn from_rational(r: &BigRational) -> Self {
        let f = crate::real::ratio_to_f64(r);
        if f.is_finite() && BigRational::from_float(f).as_ref() == Some(r) {
            Number::Float(f)
        } else {
            Number::Text(r.to_string())
        }
    }

    fn to_rational(&self) -> Result<BigRational, TorusMapError> {
        match self {
            Number::Float(x) => BigRational::from_float(*x)
                .ok_or_else(|| TorusMapError::Schema(format!("non-finite number {x}"))),
            Number::Text(s) => parse_rational(s)
                .ok_or_else(|| TorusMapError::Schema(format!("bad rational `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct BumpRecord {
    center: Number,
    half_width: Number,
    amplitude: Number,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ProfileRecord {
    period: String,
    bumps: Vec<BumpRecord>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum GeneratorRecord {
    Translation { v: [Number; 2] },
    ShearX { profile: ProfileRecord },
    ShearY { profile: ProfileRecord },
    Linear { matrix: [[i64; 2]; 2] },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct MapRecord {
    schema_version: u32,
    generators: Vec<GeneratorRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metadata: Option<serde_json::Value>,
}

/// A map together with free-form metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct MapDocument {
    pub map: AreaPreservingMap,
    pub metadata: Option<serde_json::Value>,
}

fn profile_record(p: &PeriodicProfile) -> ProfileRecord {
    ProfileRecord {
        period: format!("1/{}", p.q()),
        bumps: p
            .bumps()
            .iter()
            .map(|b| BumpRecord {
                center: Number::from_rational(b.center.value()),
                half_width: Number::from_rational(b.half_width.value()),
                amplitude: Number::from_rational(b.amplitude.value()),
            })
            .collect(),
    }
}

fn profile_from(rec: &ProfileRecord) -> Result<PeriodicProfile, TorusMapError> {
    let q: BigInt = rec
        .period
        .trim()
        .strip_prefix("1/")
        .and_then(|d| d.trim().parse().ok())
        .ok_or_else(|| TorusMapError::Schema(format!("period must read `1/q`, got `{}`", rec.period)))?;
    let bumps = rec
        .bumps
        .iter()
        .map(|b| Ok((b.center.to_rational()?, b.half_width.to_rational()?, b.amplitude.to_rational()?)))
        .collect::<Result<Vec<_>, TorusMapError>>()?;
    PeriodicProfile::new(q, bumps)
}

fn exact_number(e: &Exact) -> Number {
    Number::from_rational(e.value())
}

fn generator_records(map: &AreaPreservingMap) -> Vec<GeneratorRecord> {
    map.generators()
        .iter()
        .map(|g| match g {
            Generator::Translation(v) => GeneratorRecord::Translation {
                v: [exact_number(&v[0]), exact_number(&v[1])],
            },
            Generator::ShearX(p) => GeneratorRecord::ShearX { profile: profile_record(p) },
            Generator::ShearY(p) => GeneratorRecord::ShearY { profile: profile_record(p) },
            Generator::Linear(m) => GeneratorRecord::Linear { matrix: *m },
        })
        .collect()
}

fn map_from_records(records: &[GeneratorRecord]) -> Result<AreaPreservingMap, TorusMapError> {
    let generators = records
        .iter()
        .map(|g| {
            Ok(match g {
                GeneratorRecord::Translation { v } => Generator::translation([v[0].to_rational()?, v[1].to_rational()?]),
                GeneratorRecord::ShearX { profile } => Generator::ShearX(profile_from(profile)?),
                GeneratorRecord::ShearY { profile } => Generator::ShearY(profile_from(profile)?),
                GeneratorRecord::Linear { matrix } => {
                    let m = matrix;
                    if m[0][0] * m[1][1] - m[0][1] * m[1][0] != 1 {
                        return Err(TorusMapError::Schema("linear generator must have determinant 1".into()));
                    }
                    Generator::Linear(*m)
                }
            })
        })
        .collect::<Result<Vec<_>, TorusMapError>>()?;
    Ok(AreaPreservingMap::new(generators))
}

/// The generator list of `map` as a JSON array.
pub fn map_to_value(map: &AreaPreservingMap) -> serde_json::Value {
    serde_json::to_value(generator_records(map)).expect("serialisable")
}

pub fn map_from_value(value: serde_json::Value) -> Result<AreaPreservingMap, TorusMapError> {
    let records: Vec<GeneratorRecord> =
        serde_json::from_value(value).map_err(|e| TorusMapError::Schema(e.to_string()))?;
    map_from_records(&records)
}

pub fn write_map(map: &AreaPreservingMap, metadata: Option<serde_json::Value>) -> String {
    let rec = MapRecord {
        schema_version: SCHEMA_VERSION,
        generators: generator_records(map),
        metadata,
    };
    serde_json::to_string_pretty(&rec).expect("serialisable")
}

pub fn read_map(text: &str) -> Result<MapDocument, TorusMapError> {
    let rec: MapRecord = serde_json::from_str(text).map_err(|e| TorusMapError::Parse {
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    if rec.schema_version != SCHEMA_VERSION {
        return Err(TorusMapError::Schema(format!(
            "unsupported schema version {}",
            rec.schema_version
        )));
    }
    Ok(MapDocument {
        map: map_from_records(&rec.generators)?,
        metadata: rec.metadata,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_roundtrip() {
        let text = write_map(&AreaPreservingMap::identity(), None);
        let doc = read_map(&text).unwrap();
        assert!(doc.map.is_identity());
        assert!(doc.metadata.is_none());
    }

    #[test]
    fn exact_and_float_fields_roundtrip() {
        let p = PeriodicProfile::new(
            BigInt::from(7),
            vec![(
                BigRational::new(1.into(), 30.into()),
                BigRational::from_float(0.01).unwrap(),
                BigRational::new((-2).into(), 3.into()),
            )],
        )
        .unwrap();
        let m = AreaPreservingMap::new(vec![
            Generator::translation([BigRational::new(3.into(), 10.into()), BigRational::new(7.into(), 10.into())]),
            Generator::ShearX(p.clone()),
            Generator::ShearY(p),
            Generator::Linear([[1, 1], [0, 1]]),
        ]);
        let text = write_map(&m, Some(serde_json::json!({"stage": 2})));
        assert!(text.contains("\"3/10\""));
        assert!(text.contains("0.01"));
        let doc = read_map(&text).unwrap();
        assert_eq!(doc.map, m);
        assert_eq!(write_map(&doc.map, doc.metadata.clone()), text);
    }

    #[test]
    fn parse_errors_have_locations() {
        let err = read_map("{\"schema_version\": 1,\n \"generators\": [").unwrap_err();
        assert!(matches!(err, TorusMapError::Parse { line: 2, .. }), "{err:?}");
        let err = read_map("{\"generators\": []}").unwrap_err();
        match err {
            TorusMapError::Parse { msg, .. } => assert!(msg.contains("schema_version")),
            other => panic!("{other:?}"),
        }
        let err = read_map(r#"{"schema_version":1,"generators":[{"type":"shear_x"}]}"#).unwrap_err();
        match err {
            TorusMapError::Parse { msg, .. } => assert!(msg.contains("profile")),
            other => panic!("{other:?}"),
        }
        assert!(read_map(r#"{"schema_version":1,"generators":[{"type":"linear","matrix":[[2,0],[0,1]]}]}"#).is_err());
    }
}
