//! Simple discs, disc displacement, the `C⁰` bound for pseudo-rotations with
//! small rotation vector, and first-return statistics.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::sampling::stream_rng;
use crate::torusmap::{AreaPreservingMap, GridSpec, TorusMapError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DisplacementError {
    #[error("kappa must be nonnegative, got {0}")]
    NegativeKappa(f64),
    #[error("disc not simple: {0}")]
    NotSimple(String),
    #[error("insufficient returns: {returned} of {samples} within horizon {horizon}")]
    InsufficientReturns {
        returned: usize,
        samples: usize,
        horizon: usize,
    },
    #[error(transparent)]
    Map(#[from] TorusMapError),
}

/// A fundamental domain of the `ℤ²` action on the plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum FundamentalDomain {
    /// `x + [−1/2, 1/2)²`
    Centered([f64; 2]),
    /// `x + [0, 1)²`
    Corner([f64; 2]),
}

impl FundamentalDomain {
    pub fn lower_corner(&self) -> [f64; 2] {
        match self {
            FundamentalDomain::Centered(x) => [x[0] - 0.5, x[1] - 0.5],
            FundamentalDomain::Corner(x) => *x,
        }
    }

    pub fn diameter(&self) -> f64 {
        SQRT_2
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        let c = self.lower_corner();
        (c[0]..c[0] + 1.0).contains(&p[0]) && (c[1]..c[1] + 1.0).contains(&p[1])
    }

    /// The unique translate of `p` inside the domain, with the lattice shift.
    pub fn reduce(&self, p: [f64; 2]) -> ([f64; 2], [i64; 2]) {
        let c = self.lower_corner();
        let l = [(p[0] - c[0]).floor(), (p[1] - c[1]).floor()];
        ([p[0] - l[0], p[1] - l[1]], [l[0] as i64, l[1] as i64])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum SimpleDisc {
    Round { center: [f64; 2], radius: f64 },
    Rect { center: [f64; 2], half_sides: [f64; 2] },
    /// Points within `half_width` of a polyline.
    Snake { vertices: Vec<[f64; 2]>, half_width: f64 },
}

fn seg_dist(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    };
    (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy)
}

fn turning_angle(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let u = [b[0] - a[0], b[1] - a[1]];
    let v = [c[0] - b[0], c[1] - b[1]];
    let cross = u[0] * v[1] - u[1] * v[0];
    let dot = u[0] * v[0] + u[1] * v[1];
    cross.atan2(dot).abs()
}

impl SimpleDisc {
    pub fn kind(&self) -> &'static str {
        match self {
            SimpleDisc::Round { .. } => "round",
            SimpleDisc::Rect { .. } => "rect",
            SimpleDisc::Snake { .. } => "snake",
        }
    }

    /// Signed distance: negative inside, positive outside.
    pub fn signed_distance(&self, p: [f64; 2]) -> f64 {
        match self {
            SimpleDisc::Round { center, radius } => (p[0] - center[0]).hypot(p[1] - center[1]) - radius,
            SimpleDisc::Rect { center, half_sides } => {
                let q = [
                    (p[0] - center[0]).abs() - half_sides[0],
                    (p[1] - center[1]).abs() - half_sides[1],
                ];
                let outside = q[0].max(0.0).hypot(q[1].max(0.0));
                outside + q[0].max(q[1]).min(0.0)
            }
            SimpleDisc::Snake { vertices, half_width } => {
                let d = vertices
                    .windows(2)
                    .map(|w| seg_dist(p, w[0], w[1]))
                    .fold(f64::INFINITY, f64::min);
                d - half_width
            }
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.signed_distance(p) < 0.0
    }

    /// Closed-form area. For snakes this is `2rL + πr² + Σ r²(θᵢ/2 − tan(θᵢ/2))`
    /// over the turning angles, valid for the non-overlapping snakes built by
    /// [`SimpleDisc::snake`].
    pub fn area(&self) -> f64 {
        match self {
            SimpleDisc::Round { radius, .. } => PI * radius * radius,
            SimpleDisc::Rect { half_sides, .. } => 4.0 * half_sides[0] * half_sides[1],
            SimpleDisc::Snake { vertices, half_width } => {
                let r = *half_width;
                let len: f64 = vertices
                    .windows(2)
                    .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
                    .sum();
                let joints: f64 = vertices
                    .windows(3)
                    .map(|w| {
                        let t = turning_angle(w[0], w[1], w[2]);
                        r * r * (t / 2.0 - (t / 2.0).tan())
                    })
                    .sum();
                2.0 * r * len + PI * r * r + joints
            }
        }
    }

    /// Axis-aligned bounding box `[min, max]`.
    pub fn bounding_box(&self) -> [[f64; 2]; 2] {
        match self {
            SimpleDisc::Round { center, radius } => [
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ],
            SimpleDisc::Rect { center, half_sides } => [
                [center[0] - half_sides[0], center[1] - half_sides[1]],
                [center[0] + half_sides[0], center[1] + half_sides[1]],
            ],
            SimpleDisc::Snake { vertices, half_width } => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for v in vertices {
                    for k in 0..2 {
                        lo[k] = lo[k].min(v[k] - half_width);
                        hi[k] = hi[k].max(v[k] + half_width);
                    }
                }
                [lo, hi]
            }
        }
    }

    /// A snake with right-angle turns whose segments stay `4r` apart.
    pub fn snake(start: [f64; 2], segment: f64, turns: usize, half_width: f64) -> Result<Self, DisplacementError> {
        if segment < 4.0 * half_width {
            return Err(DisplacementError::NotSimple("snake segments shorter than 4·half-width".into()));
        }
        // staircase: right, up, right, up, ...
        let mut v = vec![start];
        for i in 0..=turns {
            let last = *v.last().expect("nonempty");
            v.push(if i % 2 == 0 {
                [last[0] + segment, last[1]]
            } else {
                [last[0], last[1] + segment]
            });
        }
        Ok(SimpleDisc::Snake {
            vertices: v,
            half_width,
        })
    }

    /// `D̃ ⊂ F` with the given margin, checked exactly on the convex hull of
    /// the region (a square domain is convex).
    pub fn check_simple(&self, domain: &FundamentalDomain, margin: f64) -> Result<(), DisplacementError> {
        let area = self.area();
        if !(area > 0.0 && area.is_finite()) {
            return Err(DisplacementError::NotSimple(format!("area {area} is not positive")));
        }
        let c = domain.lower_corner();
        let [lo, hi] = self.bounding_box();
        let inside = lo[0] >= c[0] + margin && lo[1] >= c[1] + margin && hi[0] < c[0] + 1.0 - margin && hi[1] < c[1] + 1.0 - margin;
        if !inside {
            return Err(DisplacementError::NotSimple(format!(
                "bounding box {lo:?}..{hi:?} leaves the fundamental domain"
            )));
        }
        if let SimpleDisc::Snake { vertices, half_width } = self {
            // non-adjacent segments must stay apart so the tube has no holes
            let segs: Vec<_> = vertices.windows(2).collect();
            for i in 0..segs.len() {
                for j in i + 2..segs.len() {
                    let d = [segs[j][0], segs[j][1]]
                        .iter()
                        .map(|p| seg_dist(*p, segs[i][0], segs[i][1]))
                        .chain([segs[i][0], segs[i][1]].iter().map(|p| seg_dist(*p, segs[j][0], segs[j][1])))
                        .fold(f64::INFINITY, f64::min);
                    if d <= 2.0 * half_width {
                        return Err(DisplacementError::NotSimple("snake overlaps itself".into()));
                    }
                }
            }
        }
        Ok(())
    }

    /// Distance from the torus point of `p` to `D`, via the translate of `p`
    /// in `domain` and its eight neighbours.
    pub fn signed_distance_mod(&self, domain: &FundamentalDomain, p: [f64; 2]) -> f64 {
        let (r, _) = domain.reduce(p);
        let mut best = f64::INFINITY;
        for i in -1..=1 {
            for j in -1..=1 {
                best = best.min(self.signed_distance([r[0] + i as f64, r[1] + j as f64]));
            }
        }
        best
    }

    /// Uniform point in the region by rejection from the bounding box.
    pub fn sample<G: Rng>(&self, rng: &mut G) -> [f64; 2] {
        let [lo, hi] = self.bounding_box();
        loop {
            let p = [rng.gen_range(lo[0]..hi[0]), rng.gen_range(lo[1]..hi[1])];
            if self.contains(p) {
                return p;
            }
        }
    }
}

/// `c(κ, F) = 8(κ + 6·diam F)`.
pub fn c_constant(kappa: f64, domain: &FundamentalDomain) -> Result<f64, DisplacementError> {
    if !(kappa >= 0.0) {
        return Err(DisplacementError::NegativeKappa(kappa));
    }
    Ok(8.0 * (kappa + 6.0 * domain.diameter()))
}

/// `c(κ)`, the supremum of `c(κ, F)` over unit squares.
pub fn c_sup(kappa: f64) -> Result<f64, DisplacementError> {
    c_constant(kappa, &FundamentalDomain::Centered([0.0, 0.0]))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Intersects,
    DisjointWithMargin,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscReport {
    pub shape: &'static str,
    pub area: f64,
    /// `c(κ, F)·‖ω‖`
    pub threshold: f64,
    pub verdict: Verdict,
    pub hits: usize,
    /// Smallest sampled distance from `f(z)` to `D`, when no hit occurred.
    pub margin: Option<f64>,
    /// Set when the area exceeds the threshold yet disjointness was certified.
    pub alarm: bool,
}

/// Largest number of certification points before giving up as inconclusive.
const CERTIFY_BUDGET: usize = 1 << 22;

fn certify_disjoint(map: &AreaPreservingMap, domain: &FundamentalDomain, disc: &SimpleDisc, margin: f64) -> bool {
    // every x ∈ D is within h/√2 of a grid point g that is itself within h/√2
    // of D; then d(f(x), D) ≥ d(f(g), D) − Lip·h/√2
    let lip = map.lipschitz_bound();
    let h = margin / (lip * FRAC_1_SQRT_2) / 2.0;
    let [lo, hi] = disc.bounding_box();
    let nx = ((hi[0] - lo[0]) / h).ceil() as usize + 2;
    let ny = ((hi[1] - lo[1]) / h).ceil() as usize + 2;
    if nx.saturating_mul(ny) > CERTIFY_BUDGET {
        return false;
    }
    let reach = h * FRAC_1_SQRT_2;
    let need = lip * reach;
    (0..nx * ny).into_par_iter().all(|k| {
        let g = [lo[0] - h / 2.0 + (k / ny) as f64 * h, lo[1] - h / 2.0 + (k % ny) as f64 * h];
        if disc.signed_distance(g) > reach {
            return true;
        }
        disc.signed_distance_mod(domain, map.eval(g)) > need
    })
}

/// Monte-Carlo test of `f(D) ∩ D ≠ ∅`, with certified disjointness.
#[allow(clippy::too_many_arguments)]
pub fn verify_disc_displacement(
    map: &AreaPreservingMap,
    kappa: f64,
    omega_norm: f64,
    domain: &FundamentalDomain,
    disc: &SimpleDisc,
    mc_points: usize,
    seed: u64,
    stream: u64,
) -> Result<DiscReport, DisplacementError> {
    map.require_isotopic()?;
    disc.check_simple(domain, 0.0)?;
    let threshold = c_constant(kappa, domain)? * omega_norm;
    let area = disc.area();
    let mut rng = stream_rng(seed, stream);
    let pts: Vec<[f64; 2]> = (0..mc_points).map(|_| disc.sample(&mut rng)).collect();
    let dists: Vec<f64> = pts
        .par_iter()
        .map(|p| disc.signed_distance_mod(domain, map.eval(*p)))
        .collect();
    let hits = dists.iter().filter(|d| **d < 0.0).count();
    let (verdict, margin) = if hits > 0 {
        (Verdict::Intersects, None)
    } else {
        let m = dists.iter().copied().fold(f64::INFINITY, f64::min);
        if m > 0.0 && certify_disjoint(map, domain, disc, m) {
            (Verdict::DisjointWithMargin, Some(m))
        } else {
            (Verdict::Inconclusive, Some(m))
        }
    };
    Ok(DiscReport {
        shape: disc.kind(),
        area,
        threshold,
        verdict,
        hits,
        margin,
        alarm: verdict == Verdict::DisjointWithMargin && area > threshold,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct C0BoundReport {
    /// Grid estimate of `d_{C⁰}(f, Id)` for the lift of smallest displacement.
    pub lhs: f64,
    pub lhs_certified: f64,
    /// `s + max_z diam f(B(z, s))` with `s = (c(κ)‖ω‖)^{1/2}`, from sampled circles.
    pub rhs: f64,
    /// `rhs` plus the Lipschitz slack of the circle sampling.
    pub rhs_certified: f64,
    pub hypothesis_holds: bool,
    pub pass: bool,
}

pub const C0_BOUND_TOLERANCE: f64 = 1e-6;

pub fn c0_bound_check(
    map: &AreaPreservingMap,
    kappa: f64,
    omega_norm: f64,
    grid: &GridSpec,
) -> Result<C0BoundReport, DisplacementError> {
    let c = c_sup(kappa)?;
    let d = map.c0_distance_to_identity(grid)?;
    let s = (c * omega_norm).sqrt();
    const CIRCLE: usize = 64;
    let diam = grid
        .points()
        .par_iter()
        .map(|z| {
            let img: Vec<[f64; 2]> = (0..CIRCLE)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / CIRCLE as f64;
                    map.eval([z[0] + s * t.cos(), z[1] + s * t.sin()])
                })
                .collect();
            let mut best: f64 = 0.0;
            for (i, a) in img.iter().enumerate() {
                for b in &img[i + 1..] {
                    best = best.max((a[0] - b[0]).hypot(a[1] - b[1]));
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    let chord = 2.0 * s * (PI / CIRCLE as f64).sin();
    let rhs = s + diam;
    Ok(C0BoundReport {
        lhs: d.estimate,
        lhs_certified: d.certified,
        rhs,
        rhs_certified: rhs + map.lipschitz_bound() * chord,
        hypothesis_holds: omega_norm < 1.0 / (2.0 * c),
        pass: d.estimate <= rhs + C0_BOUND_TOLERANCE,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReturnRecord {
    pub z: [f64; 2],
    pub n_d: usize,
    pub l_d: [i64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReturnStats {
    pub records: Vec<ReturnRecord>,
    pub samples: usize,
    pub returned: usize,
    pub area: f64,
    /// `λ(D)·mean(n_D)`
    pub kac_estimate: f64,
    pub kac_std_error: f64,
    pub kac_pass: bool,
    /// Mean of `(1/N) Σ n_D(f_D^i(z))` along return chains.
    pub chain_mean: f64,
    pub chain_length: usize,
    /// Largest `‖F^{Σ n_D}(z̃) − Σ l_D − z̃_N‖` over all chains.
    pub lift_identity_error: f64,
}

impl ReturnStats {
    /// `chain_mean ≥ (1 − slack)/(c(κ, F)‖ω‖)`.
    pub fn meets_return_bound(&self, kappa: f64, domain: &FundamentalDomain, omega_norm: f64, slack: f64) -> bool {
        let c = c_constant(kappa, domain).unwrap_or(f64::INFINITY);
        self.chain_mean >= (1.0 - slack) / (c * omega_norm)
    }
}

pub const RETURN_FRACTION: f64 = 0.95;
const BLOCK: usize = 1024;

/// First return to `D̃ + ℤ²` within `horizon`, as `(n_D, l_D, landing lift)`.
fn first_return(
    map: &AreaPreservingMap,
    domain: &FundamentalDomain,
    disc: &SimpleDisc,
    z: [f64; 2],
    horizon: usize,
) -> Option<(usize, [i64; 2], [f64; 2])> {
    let mut p = z;
    for n in 1..=horizon {
        p = map.eval(p);
        let (r, l) = domain.reduce(p);
        if disc.contains(r) {
            return Some((n, l, r));
        }
    }
    None
}

pub fn first_return_stats(
    map: &AreaPreservingMap,
    domain: &FundamentalDomain,
    disc: &SimpleDisc,
    horizon: usize,
    samples: usize,
    chain_length: usize,
    seed: u64,
) -> Result<ReturnStats, DisplacementError> {
    map.require_isotopic()?;
    disc.check_simple(domain, 0.0)?;
    let blocks = samples.div_ceil(BLOCK);
    let records: Vec<Option<ReturnRecord>> = (0..blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let count = BLOCK.min(samples - b * BLOCK);
            (0..count)
                .map(|_| {
                    let z = disc.sample(&mut rng);
                    first_return(map, domain, disc, z, horizon).map(|(n_d, l_d, _)| ReturnRecord { z, n_d, l_d })
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let returned: Vec<ReturnRecord> = records.into_iter().flatten().collect();
    if (returned.len() as f64) < RETURN_FRACTION * samples as f64 {
        return Err(DisplacementError::InsufficientReturns {
            returned: returned.len(),
            samples,
            horizon,
        });
    }
    let area = disc.area();
    let ns: Vec<f64> = returned.iter().map(|r| r.n_d as f64).collect();
    let mean = ns.iter().sum::<f64>() / ns.len() as f64;
    let var = ns.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (ns.len().max(2) - 1) as f64;
    let kac_estimate = area * mean;
    let kac_std_error = area * (var / ns.len() as f64).sqrt();

    // return chains from the first few samples
    let chains = returned.len().min(64);
    let chain_stats: Vec<(f64, f64)> = returned[..chains]
        .par_iter()
        .map(|rec| {
            let mut z = rec.z;
            let mut lift = rec.z;
            let mut total = 0usize;
            let mut lsum = [0i64, 0i64];
            let mut steps = 0usize;
            for _ in 0..chain_length.max(1) {
                let Some((n, l, r)) = first_return(map, domain, disc, z, horizon) else {
                    break;
                };
                for _ in 0..n {
                    lift = map.eval(lift);
                }
                total += n;
                lsum = [lsum[0] + l[0], lsum[1] + l[1]];
                z = r;
                steps += 1;
            }
            let err = (lift[0] - lsum[0] as f64 - z[0]).hypot(lift[1] - lsum[1] as f64 - z[1]);
            (if steps > 0 { total as f64 / steps as f64 } else { f64::NAN }, err)
        })
        .collect();
    let valid: Vec<f64> = chain_stats.iter().map(|c| c.0).filter(|x| x.is_finite()).collect();
    let chain_mean = valid.iter().sum::<f64>() / valid.len().max(1) as f64;
    let lift_identity_error = chain_stats.iter().map(|c| c.1).fold(0.0, f64::max);
    Ok(ReturnStats {
        samples,
        returned: returned.len(),
        records: returned,
        area,
        kac_estimate,
        kac_std_error,
        kac_pass: kac_estimate <= 1.0 + 3.0 * kac_std_error,
        chain_mean,
        chain_length,
        lift_identity_error,
    })
}

/// One randomized disc of the given kind with area in `[min_area, max_area]`,
/// placed inside `domain`.
pub fn random_disc<G: Rng>(
    rng: &mut G,
    kind: usize,
    domain: &FundamentalDomain,
    min_area: f64,
    max_area: f64,
) -> SimpleDisc {
    let c = domain.lower_corner();
    loop {
        let area = rng.gen_range(min_area..max_area);
        let disc = match kind % 3 {
            0 => {
                let radius = (area / PI).sqrt();
                SimpleDisc::Round {
                    center: [c[0] + rng.gen_range(0.05..0.95), c[1] + rng.gen_range(0.05..0.95)],
                    radius,
                }
            }
            1 => {
                let aspect: f64 = rng.gen_range(0.3..3.0);
                let w = (area * aspect).sqrt() / 2.0;
                let h = area / (4.0 * w);
                SimpleDisc::Rect {
                    center: [c[0] + rng.gen_range(0.05..0.95), c[1] + rng.gen_range(0.05..0.95)],
                    half_sides: [w, h],
                }
            }
            _ => {
                let turns = rng.gen_range(1..4usize);
                let r = rng.gen_range(0.01..0.04f64);
                // solve 2r·L + πr² + turns·r²(π/4 − 1) = area for the segment length
                let joints = turns as f64 * r * r * (PI / 4.0 - 1.0);
                let len = (area - PI * r * r - joints) / (2.0 * r * (turns + 1) as f64);
                if len < 4.0 * r {
                    continue;
                }
                let start = [c[0] + rng.gen_range(0.05..0.5), c[1] + rng.gen_range(0.05..0.5)];
                match SimpleDisc::snake(start, len, turns, r) {
                    Ok(s) => s,
                    Err(_) => continue,
                }
            }
        };
        if disc.check_simple(domain, 1e-9).is_ok() {
            return disc;
        }
    }
}
