//! Rotation vectors, rotation sets, deviation series and rigidity scans.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::diophantine::torus_norm2_f64;
use crate::real::Real;
use crate::sampling::r2_points;
use crate::torusmap::{operator_norm, AreaPreservingMap, GridSpec, TorusMapError};

/// `F^k(z) − z` for `k = 1..=n`, computed in `R` before rounding to `f64`.
pub fn displacements<R: Real>(map: &AreaPreservingMap, z: [f64; 2], n: usize) -> Vec<[f64; 2]> {
    let z0 = [R::from_f64(z[0]), R::from_f64(z[1])];
    let mut p = z0.clone();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        p = map.eval(p);
        out.push([
            (p[0].clone() - z0[0].clone()).to_f64(),
            (p[1].clone() - z0[1].clone()).to_f64(),
        ]);
    }
    out
}

/// `(F^n(z) − z)/n` evaluated in `R`.
fn mean_displacement<R: Real>(map: &AreaPreservingMap, z: [f64; 2], n: usize) -> [f64; 2] {
    let z0 = [R::from_f64(z[0]), R::from_f64(z[1])];
    let mut p = z0.clone();
    for _ in 0..n {
        p = map.eval(p);
    }
    let nn = R::from_f64(n as f64);
    [
        ((p[0].clone() - z0[0].clone()) / nn.clone()).to_f64(),
        ((p[1].clone() - z0[1].clone()) / nn).to_f64(),
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub struct RotationEstimate {
    pub vector: [f64; 2],
    /// Spread across samples plus `2κ̂/N`.
    pub residual: f64,
    /// Largest measured `‖F^n(z) − z − nρ‖` over samples and `n ≤ N`.
    pub deviation_cap: f64,
}

pub fn estimate_rotation_vector(
    map: &AreaPreservingMap,
    samples: usize,
    n: usize,
) -> Result<RotationEstimate, TorusMapError> {
    estimate_rotation_vector_in::<f64>(map, samples, n)
}

pub fn estimate_rotation_vector_in<R: Real>(
    map: &AreaPreservingMap,
    samples: usize,
    n: usize,
) -> Result<RotationEstimate, TorusMapError> {
    map.require_isotopic()?;
    assert!(n >= 1 && samples >= 1, "need at least one sample and one iterate");
    let pts = r2_points(samples);
    let finals: Vec<[f64; 2]> = pts.par_iter().map(|z| mean_displacement::<R>(map, *z, n)).collect();
    let mut mean = [0.0, 0.0];
    for f in &finals {
        mean[0] += f[0];
        mean[1] += f[1];
    }
    mean = [mean[0] / samples as f64, mean[1] / samples as f64];
    if finals.iter().all(|f| *f == finals[0]) {
        mean = finals[0];
    }
    let spread = finals
        .iter()
        .map(|f| (f[0] - mean[0]).hypot(f[1] - mean[1]))
        .fold(0.0, f64::max);
    let deviation_cap = pts
        .par_iter()
        .map(|z| {
            displacements::<R>(map, *z, n)
                .iter()
                .enumerate()
                .map(|(k, d)| {
                    let k = (k + 1) as f64;
                    (d[0] - k * mean[0]).hypot(d[1] - k * mean[1])
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(RotationEstimate {
        vector: mean,
        residual: spread + 2.0 * deviation_cap / n as f64,
        deviation_cap,
    })
}

/// Convex hull by the monotone chain, counter-clockwise, without collinear points.
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite points"));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let cross = |o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn diameter(points: &[[f64; 2]]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            d = d.max((a[0] - b[0]).hypot(a[1] - b[1]));
        }
    }
    d
}

#[derive(Clone, Debug, PartialEq)]
pub struct RotationSetEstimate {
    pub vertices: Vec<[f64; 2]>,
    pub diameter: f64,
    pub tolerance: f64,
}

impl RotationSetEstimate {
    /// Single-vector verdict at the configured tolerance.
    pub fn is_pseudo_rotation(&self) -> bool {
        self.diameter < self.tolerance
    }
}

pub const DEFAULT_HULL_TOLERANCE: f64 = 1e-3;

/// Hull of `(F^n(z) − z)/n` over samples and `n ∈ [N/2, N]`.
pub fn estimate_rotation_set(
    map: &AreaPreservingMap,
    samples: usize,
    n: usize,
) -> Result<RotationSetEstimate, TorusMapError> {
    estimate_rotation_set_in::<f64>(map, samples, n)
}

pub fn estimate_rotation_set_in<R: Real>(
    map: &AreaPreservingMap,
    samples: usize,
    n: usize,
) -> Result<RotationSetEstimate, TorusMapError> {
    map.require_isotopic()?;
    assert!(n >= 2, "window needs N ≥ 2");
    let lo = n.div_ceil(2);
    let hulls: Vec<Vec<[f64; 2]>> = r2_points(samples)
        .par_iter()
        .map(|z| {
            let d = displacements::<R>(map, *z, n);
            let pts: Vec<[f64; 2]> = (lo..=n)
                .map(|k| [d[k - 1][0] / k as f64, d[k - 1][1] / k as f64])
                .collect();
            convex_hull(&pts)
        })
        .collect();
    let all: Vec<[f64; 2]> = hulls.into_iter().flatten().collect();
    let vertices = convex_hull(&all);
    Ok(RotationSetEstimate {
        diameter: diameter(&vertices),
        vertices,
        tolerance: DEFAULT_HULL_TOLERANCE,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeviationSample {
    pub n: usize,
    pub z_index: usize,
    pub deviation: [f64; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeviationSeries {
    pub rho: [f64; 2],
    pub direction: Option<[f64; 2]>,
    /// Largest-norm sample at each `n`.
    pub worst: Vec<DeviationSample>,
    /// Running maximum of `‖F^n(z) − z − nρ‖`.
    pub running_max: Vec<f64>,
    /// Running maximum of `|⟨·, v^⊥⟩|` when a direction is given.
    pub running_max_projection: Option<Vec<f64>>,
}

impl DeviationSeries {
    /// Bounded-mean-motion estimate `κ̂`.
    pub fn kappa(&self) -> f64 {
        self.running_max.last().copied().unwrap_or(0.0)
    }

    pub fn kappa_along(&self) -> Option<f64> {
        self.running_max_projection
            .as_ref()
            .map(|v| v.last().copied().unwrap_or(0.0))
    }
}

fn perp_unit(v: [f64; 2]) -> [f64; 2] {
    let n = v[0].hypot(v[1]);
    [-v[1] / n, v[0] / n]
}

/// Deviations from starting points `zs` for `n = 1..=N`.
pub fn deviation_series_from(
    map: &AreaPreservingMap,
    rho: [f64; 2],
    zs: &[[f64; 2]],
    n: usize,
    direction: Option<[f64; 2]>,
) -> DeviationSeries {
    deviation_series_in::<f64>(map, rho, zs, n, direction)
}

pub fn deviation_series_in<R: Real>(
    map: &AreaPreservingMap,
    rho: [f64; 2],
    zs: &[[f64; 2]],
    n: usize,
    direction: Option<[f64; 2]>,
) -> DeviationSeries {
    let perp = direction.map(perp_unit);
    // per n: (worst norm, its sample index, its deviation, max |projection|)
    type Slot = (f64, usize, [f64; 2], f64);
    let empty: Slot = (-1.0, usize::MAX, [0.0, 0.0], 0.0);
    let better = |a: &Slot, b: &Slot| b.0 > a.0 || (b.0 == a.0 && b.1 < a.1);
    let slots: Vec<Slot> = zs
        .par_iter()
        .enumerate()
        .fold(
            || vec![empty; n],
            |mut acc, (i, z)| {
                for (k, d) in displacements::<R>(map, *z, n).iter().enumerate() {
                    let kf = (k + 1) as f64;
                    let dev = [d[0] - kf * rho[0], d[1] - kf * rho[1]];
                    let proj = perp.map_or(0.0, |p| (dev[0] * p[0] + dev[1] * p[1]).abs());
                    let cand = (dev[0].hypot(dev[1]), i, dev, proj);
                    let slot = &mut acc[k];
                    let pmax = slot.3.max(proj);
                    if better(slot, &cand) {
                        *slot = cand;
                    }
                    slot.3 = pmax;
                }
                acc
            },
        )
        .reduce(
            || vec![empty; n],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    let pmax = x.3.max(y.3);
                    if better(x, &y) {
                        *x = y;
                    }
                    x.3 = pmax;
                }
                a
            },
        );
    let mut worst = Vec::with_capacity(n);
    let mut running_max = Vec::with_capacity(n);
    let mut running_proj = Vec::with_capacity(n);
    let (mut rm, mut rp) = (0.0f64, 0.0f64);
    for (k, s) in slots.iter().enumerate() {
        rm = rm.max(s.0.max(0.0));
        rp = rp.max(s.3);
        worst.push(DeviationSample {
            n: k + 1,
            z_index: if s.1 == usize::MAX { 0 } else { s.1 },
            deviation: s.2,
        });
        running_max.push(rm);
        running_proj.push(rp);
    }
    DeviationSeries {
        rho,
        direction,
        worst,
        running_max,
        running_max_projection: perp.map(|_| running_proj),
    }
}

/// Deviation series over `samples` low-discrepancy starting points.
pub fn deviation_series(
    map: &AreaPreservingMap,
    rho: [f64; 2],
    samples: usize,
    n: usize,
    direction: Option<[f64; 2]>,
) -> DeviationSeries {
    deviation_series_from(map, rho, &r2_points(samples), n, direction)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidityCandidate {
    pub n: usize,
    /// `max_x d_𝕋²(fⁿ(x), x)` over the grid.
    pub c0: f64,
    /// `max_x ‖Dfⁿ(x) − I‖` over the grid; partial evidence only.
    pub c1: f64,
}

fn mul_f(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

/// All `n ≤ N_max` with their grid `C⁰` and `C¹` distances, sorted by `C⁰`.
pub fn rigidity_scan(map: &AreaPreservingMap, n_max: usize, grid: &GridSpec) -> Vec<RigidityCandidate> {
    let per_point: Vec<Vec<(f64, f64)>> = grid
        .points()
        .par_iter()
        .map(|z| {
            let mut p = *z;
            let mut j = [[1.0, 0.0], [0.0, 1.0]];
            let mut out = Vec::with_capacity(n_max);
            for _ in 0..n_max {
                j = mul_f(&map.jacobian(p), &j);
                p = map.eval(p);
                let c0 = torus_norm2_f64([p[0] - z[0], p[1] - z[1]]);
                let c1 = operator_norm([[j[0][0] - 1.0, j[0][1]], [j[1][0], j[1][1] - 1.0]]);
                out.push((c0, c1));
            }
            out
        })
        .collect();
    let mut all: Vec<RigidityCandidate> = (0..n_max)
        .map(|k| {
            let (mut c0, mut c1) = (0.0f64, 0.0f64);
            for s in &per_point {
                c0 = c0.max(s[k].0);
                c1 = c1.max(s[k].1);
            }
            RigidityCandidate { n: k + 1, c0, c1 }
        })
        .collect();
    all.sort_by(|a, b| a.c0.total_cmp(&b.c0).then(a.n.cmp(&b.n)));
    all
}

/// The ten best candidates of [`rigidity_scan`].
pub fn rigidity_search(map: &AreaPreservingMap, n_max: usize, grid: &GridSpec) -> Vec<RigidityCandidate> {
    let mut all = rigidity_scan(map, n_max, grid);
    all.truncate(10);
    all
}

pub fn deviation_csv(series: &DeviationSeries) -> String {
    let perp = series.direction.map(perp_unit);
    let mut s = String::from("n,dev_x,dev_y,norm,proj_v\n");
    for w in &series.worst {
        let d = w.deviation;
        let proj = perp.map_or(String::new(), |p| format!("{:e}", d[0] * p[0] + d[1] * p[1]));
        writeln!(s, "{},{:e},{:e},{:e},{}", w.n, d[0], d[1], d[0].hypot(d[1]), proj).expect("string write");
    }
    s
}

pub fn rigidity_csv(cands: &[RigidityCandidate]) -> String {
    let mut s = String::from("n,c0_dist,c1_dist\n");
    for c in cands {
        writeln!(s, "{},{:e},{:e}", c.n, c.c0, c.c1).expect("string write");
    }
    s
}

pub fn hull_csv(set: &RotationSetEstimate) -> String {
    let mut s = String::from("vertex,rho_x,rho_y\n");
    for (i, v) in set.vertices.iter().enumerate() {
        writeln!(s, "{i},{:e},{:e}", v[0], v[1]).expect("string write");
    }
    s
}
