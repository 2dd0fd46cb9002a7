//! Tools for maps commuting with a pseudo-rotation: displacement classes,
//! the rotation homomorphism `φ₁`, evaluation `φ₂`, the uniform spread bound
//! for commuting maps and commutator defects.

use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::diophantine::torus_norm2_f64;
use crate::real::{ratio_to_f64, Hp, Real};
use crate::rotation::convex_hull;
use crate::torusmap::{AreaPreservingMap, Generator, GridSpec, TorusMapError};

/// Largest commutator defect accepted as commuting.
pub const COMMUTE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CentralizerError {
    #[error("does not commute: defect {0:e}")]
    DoesNotCommute(f64),
    #[error("quadrature resolution must be at least 2, got {0}")]
    Resolution(usize),
    #[error(transparent)]
    Map(#[from] TorusMapError),
}

fn reduce(v: [f64; 2]) -> [f64; 2] {
    [v[0] - v[0].floor(), v[1] - v[1].floor()]
}

/// `D_g(x) = g̃(x̃) − x̃ mod ℤ²`, in `[0, 1)²`.
pub fn displacement_class(g: &AreaPreservingMap, x: [f64; 2]) -> Result<[f64; 2], CentralizerError> {
    g.require_isotopic()?;
    let y = g.eval(x);
    Ok(reduce([y[0] - x[0], y[1] - x[1]]))
}

/// `φ₂(g) = g(x₀)` on the torus.
pub fn phi2(g: &AreaPreservingMap, x0: [f64; 2]) -> [f64; 2] {
    reduce(g.eval(x0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Phi1 {
    /// Mean displacement of the lift given by the generators.
    pub lift_mean: [f64; 2],
    /// `lift_mean mod ℤ²`
    pub value: [f64; 2],
    /// Difference between the two refinement levels.
    pub error: f64,
    /// Set for pure translations, as `"p/q"` strings.
    pub exact: Option<[String; 2]>,
    pub resolution: usize,
}

/// Total translation of a map built only from translations.
pub fn translation_sum(g: &AreaPreservingMap) -> Option<[BigRational; 2]> {
    let mut acc = [BigRational::zero(), BigRational::zero()];
    for gen in g.generators() {
        match gen {
            Generator::Translation(v) => {
                acc[0] += v[0].value();
                acc[1] += v[1].value();
            }
            _ => return None,
        }
    }
    Some(acc)
}

fn mean_displacement(g: &AreaPreservingMap, grid: &GridSpec) -> [f64; 2] {
    // the generators define a continuous lift, so no unwrapping is needed
    let n = grid.len() as f64;
    let s = grid
        .points()
        .into_par_iter()
        .map(|p| {
            let y = g.eval(p);
            [y[0] - p[0], y[1] - p[1]]
        })
        .reduce(|| [0.0, 0.0], |a, b| [a[0] + b[0], a[1] + b[1]]);
    [s[0] / n, s[1] / n]
}

/// `φ₁(g) = ∫ D_g dλ` by midpoint quadrature at `G` and `2G`.
pub fn phi1(g: &AreaPreservingMap, resolution: usize) -> Result<Phi1, CentralizerError> {
    g.require_isotopic()?;
    if let Some(t) = translation_sum(g) {
        let lift_mean = [ratio_to_f64(&t[0]), ratio_to_f64(&t[1])];
        return Ok(Phi1 {
            lift_mean,
            value: reduce(lift_mean),
            error: 0.0,
            exact: Some([t[0].to_string(), t[1].to_string()]),
            resolution: 0,
        });
    }
    if resolution < 2 {
        return Err(CentralizerError::Resolution(resolution));
    }
    let coarse = mean_displacement(g, &GridSpec::new(resolution));
    let fine = mean_displacement(g, &GridSpec::new(2 * resolution));
    let error = (fine[0] - coarse[0]).hypot(fine[1] - coarse[1]);
    Ok(Phi1 {
        lift_mean: fine,
        value: reduce(fine),
        error,
        exact: None,
        resolution: 2 * resolution,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CentralizerCandidate {
    pub defect: f64,
    pub commutes: bool,
}

/// `max_x d(f(g(x)), g(f(x)))` over the grid.
pub fn commutator_defect(f: &AreaPreservingMap, g: &AreaPreservingMap, grid: &GridSpec) -> CentralizerCandidate {
    let defect = grid
        .points()
        .into_par_iter()
        .map(|p| {
            let a = f.eval(g.eval(p));
            let b = g.eval(f.eval(p));
            torus_norm2_f64([a[0] - b[0], a[1] - b[1]])
        })
        .reduce(|| 0.0, f64::max);
    CentralizerCandidate {
        defect,
        commutes: defect <= COMMUTE_TOLERANCE,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniformBoundReport {
    pub kappa_hat: f64,
    pub defect: f64,
    /// `max_x ‖Φ_n(x₀) − Φ_n(x₁)‖` for `n = 1..=N`.
    pub spreads: Vec<f64>,
    pub max_spread: f64,
    pub bound: f64,
    pub pass: bool,
    /// `φ₁(g)` lifted, the candidate rotation vector of `g`.
    pub alpha: [f64; 2],
    /// `max_{n,x} ‖Φ_n(x) − nα‖`; `g ∈ 𝒞_{2κ,α}` asks for this to stay below `2κ`.
    pub bmm_deviation: f64,
    pub x0_assumption: &'static str,
}

fn diameter(points: &[[f64; 2]]) -> f64 {
    let hull = convex_hull(points);
    let mut best: f64 = 0.0;
    for (i, a) in hull.iter().enumerate() {
        for b in &hull[i + 1..] {
            best = best.max((a[0] - b[0]).hypot(a[1] - b[1]));
        }
    }
    best
}

/// Spread of `Φ_n(x) = g̃ⁿ(x̃) − x̃` over the grid for `n ≤ N`, against `2κ̂`.
pub fn verify_uniform_bound(
    f: &AreaPreservingMap,
    kappa_hat: f64,
    g: &AreaPreservingMap,
    n: usize,
    grid: &GridSpec,
    tolerance: f64,
) -> Result<UniformBoundReport, CentralizerError> {
    f.require_isotopic()?;
    g.require_isotopic()?;
    let cand = commutator_defect(f, g, grid);
    if !cand.commutes {
        return Err(CentralizerError::DoesNotCommute(cand.defect));
    }
    let pts = grid.points();
    let orbits: Vec<Vec<[f64; 2]>> = pts
        .par_iter()
        .map(|p| {
            g.iterate(*p, n)
                .into_iter()
                .skip(1)
                .map(|y| [y[0] - p[0], y[1] - p[1]])
                .collect()
        })
        .collect();
    let alpha = phi1(g, grid.resolution)?.lift_mean;
    let per_n: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|k| {
            let phis: Vec<[f64; 2]> = orbits.iter().map(|o| o[k]).collect();
            let m = (k + 1) as f64;
            let dev = phis
                .iter()
                .map(|v| (v[0] - m * alpha[0]).hypot(v[1] - m * alpha[1]))
                .fold(0.0, f64::max);
            (diameter(&phis), dev)
        })
        .collect();
    let spreads: Vec<f64> = per_n.iter().map(|p| p.0).collect();
    let max_spread = spreads.iter().copied().fold(0.0, f64::max);
    let bound = 2.0 * kappa_hat;
    Ok(UniformBoundReport {
        kappa_hat,
        defect: cand.defect,
        max_spread,
        bound,
        pass: max_spread <= bound + tolerance,
        alpha,
        bmm_deviation: per_n.iter().map(|p| p.1).fold(0.0, f64::max),
        spreads,
        x0_assumption: "x0 is taken to have a dense orbit under f",
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HomomorphismReport {
    pub lhs: Phi1,
    pub rhs: [f64; 2],
    pub discrepancy: f64,
    pub allowed: f64,
    pub pass: bool,
}

/// `φ₁(g₁g₂) = φ₁(g₁) + φ₁(g₂) mod ℤ²`, both sides by quadrature. All maps
/// here preserve area, so the volume hypothesis holds by construction.
pub fn verify_homomorphism(
    g1: &AreaPreservingMap,
    g2: &AreaPreservingMap,
    resolution: usize,
) -> Result<HomomorphismReport, CentralizerError> {
    let a = phi1(g1, resolution)?;
    let b = phi1(g2, resolution)?;
    let lhs = phi1(&g1.compose(g2), resolution)?;
    let rhs = reduce([a.lift_mean[0] + b.lift_mean[0], a.lift_mean[1] + b.lift_mean[1]]);
    let discrepancy = torus_norm2_f64([lhs.value[0] - rhs[0], lhs.value[1] - rhs[1]]);
    let allowed = 2.0 * (a.error + b.error + lhs.error) + 1e-12;
    Ok(HomomorphismReport {
        pass: discrepancy <= allowed,
        lhs,
        rhs,
        discrepancy,
        allowed,
    })
}

/// `max_x d(g(x), x)` on the grid in high precision, for checking that a map
/// with integral rotation vector in a conjugated-translation family is the
/// identity.
pub fn identity_defect(g: &AreaPreservingMap, grid: &GridSpec) -> f64 {
    grid.points()
        .into_par_iter()
        .map(|p| {
            let x = [Hp::from_f64(p[0]), Hp::from_f64(p[1])];
            let y = g.eval(x.clone());
            let d = |a: Hp, b: &Hp| {
                let t = a - b.clone();
                (t.clone() - t.round()).abs()
            };
            d(y[0].clone(), &x[0]).hypot(&d(y[1].clone(), &x[1])).to_f64()
        })
        .reduce(|| 0.0, f64::max)
}

/// `n,spread`
pub fn spread_csv(report: &UniformBoundReport) -> String {
    let mut out = String::from("n,spread\n");
    for (k, s) in report.spreads.iter().enumerate() {
        out.push_str(&format!("{},{:.17e}\n", k + 1, s));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torusmap::PeriodicProfile;

    fn shear_h(delta: f64) -> AreaPreservingMap {
        let p = PeriodicProfile::from_f64(1, &[(0.5, 0.3, delta)]).unwrap();
        let q = PeriodicProfile::from_f64(1, &[(0.25, 0.2, delta)]).unwrap();
        AreaPreservingMap::new(vec![Generator::ShearX(p), Generator::ShearY(q)])
    }

    #[test]
    fn translations() {
        let t = AreaPreservingMap::translation_f64(0.25, 0.625);
        let d = displacement_class(&t, [0.3, 0.9]).unwrap();
        assert!((d[0] - 0.25).abs() < 1e-15 && (d[1] - 0.625).abs() < 1e-15);
        let p = phi1(&t, 8).unwrap();
        assert_eq!(p.value, [0.25, 0.625]);
        assert_eq!(p.exact.unwrap(), ["1/4".to_string(), "5/8".to_string()]);
        assert_eq!(phi2(&AreaPreservingMap::identity(), [0.2, 0.7]), [0.2, 0.7]);
        let r = verify_homomorphism(&t, &t, 8).unwrap();
        assert!(r.pass && r.discrepancy == 0.0);
        assert_eq!(r.lhs.value, [0.5, 0.25]);
    }

    #[test]
    fn lift_independence() {
        let h = shear_h(0.05);
        let g = AreaPreservingMap::translation_f64(0.1, 0.2).conjugate(&h);
        for x in [[0.1, 0.2], [0.73, 0.41]] {
            let a = displacement_class(&g, x).unwrap();
            let b = displacement_class(&g, [x[0] + 1.0, x[1]]).unwrap();
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn conjugated_translations() {
        let h = shear_h(0.05);
        let f = AreaPreservingMap::translation_f64(0.1, 0.2).conjugate(&h);
        let p = phi1(&f, 64).unwrap();
        let off = |p: &Phi1, a: [f64; 2]| (p.lift_mean[0] - a[0]).hypot(p.lift_mean[1] - a[1]);
        assert!(off(&p, [0.1, 0.2]) <= 2.0 * p.error + 1e-12, "{p:?}");
        assert!(p.error < 1e-6);
        let p3 = phi1(&f.power(3), 64).unwrap();
        assert!(off(&p3, [0.3, 0.6]) <= 2.0 * p3.error + 1e-12, "{p3:?}");
        let g = AreaPreservingMap::translation_f64(0.37, 0.05).conjugate(&h);
        assert!(verify_homomorphism(&f, &g, 32).unwrap().pass);
    }

    #[test]
    fn uniform_bound() {
        let t = AreaPreservingMap::translation_f64(0.1, 0.2);
        let a = AreaPreservingMap::translation_f64(0.3, 0.01);
        let r = verify_uniform_bound(&t, 0.0, &a, 20, &GridSpec::new(6), 1e-9).unwrap();
        assert!(r.max_spread < 1e-12 && r.pass);

        let delta = 0.02;
        let h = shear_h(delta);
        let f = t.conjugate(&h);
        let g = a.conjugate(&h);
        let d = h.c0_distance_to_identity(&GridSpec::new(64)).unwrap().certified;
        let r = verify_uniform_bound(&f, 2.0 * d, &g, 30, &GridSpec::new(12), 1e-6).unwrap();
        assert!(r.pass, "{} vs {}", r.max_spread, r.bound);
        assert!(r.bmm_deviation <= r.bound + 1e-6);
        assert!(spread_csv(&r).starts_with("n,spread\n1,"));

        assert!(matches!(
            verify_uniform_bound(&f, 0.1, &a, 5, &GridSpec::new(8), 1e-6),
            Err(CentralizerError::DoesNotCommute(d)) if d > 1e-3
        ));
    }

    #[test]
    fn integral_rotation_is_identity() {
        let h = shear_h(0.05);
        let g = AreaPreservingMap::translation_f64(1.0, -2.0).conjugate(&h);
        assert!(identity_defect(&g, &GridSpec::new(6)) < 1e-100);
    }
}
