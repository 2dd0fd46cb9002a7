//! Anosov–Katok construction of a pseudo-rotation with bounded mean motion
//! that is not conjugate to a translation, as a finite sequence of stages
//! `f_n = H_n T_{ω_n} H_n⁻¹`.
//!
//! Each stage records the conjugacy factors `h_1 … h_n`, the rational
//! rotation vector `ω_n = ŵ_n / q_n`, a marker pair `(x_n, y_n)` that `H_n`
//! pulls apart and a probe pair with a separation witness `m_n`. All
//! evaluations run in [`Hp`]: from the third stage on, profile periods are far
//! below `f64` resolution.

pub mod lattice;
pub mod step;
pub mod report;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diophantine::{parse_rational, super_liouville_score_at, Vector2};
use crate::real::{ln_bigint, ratio_to_f64, Hp, Real};
use crate::rotation::deviation_series_in;
use crate::sampling::r2_points;
use crate::torusmap::{map_from_value, map_to_value, AreaPreservingMap, Generator, GridSpec, TorusMapError};

pub use lattice::{covering_radius, gauss_reduce, hermite_basis, nearest_point, orbit_lattice};
pub use step::{build_h, BuildReport, BuiltH};
pub use report::{Check, ConstructionReport, Relation, StageRecord, Witness};

/// Separation that `H_n` must maintain between the markers.
pub const SEPARATION: f64 = 1e-3;
/// Bound on the mean motion of every stage.
pub const BMM_LIMIT: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstructionError {
    #[error("transversality too small: measured {measured:e}, required {tau:e}")]
    Transversality { measured: f64, tau: f64 },
    #[error("bump placement failed: {0}")]
    BumpPlacement(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid stage state: {0}")]
    Validation(String),
    #[error("kappa collapsed: separation margin {margin:e}, Lipschitz bound {lipschitz:e}")]
    KappaCollapsed { margin: f64, lipschitz: f64 },
    #[error("r search exceeded cap after {attempts} attempts ({bits} bits): {reason}")]
    RSearch { attempts: usize, bits: u64, reason: String },
    #[error("{0}")]
    Budget(String),
    #[error(transparent)]
    Map(#[from] TorusMapError),
}

pub(crate) fn min_rep(r: &BigRational) -> BigRational {
    r - r.round()
}

/// Distance from `r` to `(1/q)ℤ`.
pub(crate) fn dist_to_grid(r: &BigRational, q: &BigInt) -> BigRational {
    let qr = BigRational::from_integer(q.clone());
    let s = r * &qr;
    (&s - s.round()).abs() / qr
}

pub(crate) fn hp(p: &[BigRational; 2]) -> [Hp; 2] {
    [Hp::from_ratio(&p[0]), Hp::from_ratio(&p[1])]
}

pub(crate) fn torus_dist(a: &[Hp; 2], b: &[Hp; 2]) -> f64 {
    let f = |u: &Hp, v: &Hp| {
        let d = u.clone() - v.clone();
        d.clone() - d.round()
    };
    f(&a[0], &b[0]).hypot(&f(&a[1], &b[1])).to_f64()
}

fn add_hp(p: &[Hp; 2], v: &[BigRational; 2]) -> [Hp; 2] {
    [p[0].clone() + Hp::from_ratio(&v[0]), p[1].clone() + Hp::from_ratio(&v[1])]
}

fn frac(r: &BigRational) -> BigRational {
    r - r.floor()
}

fn pow2(e: i32) -> f64 {
    2f64.powi(e)
}

fn big_from_f64_ceil(x: f64) -> Result<BigInt, ConstructionError> {
    BigInt::from_f64(x.ceil()).ok_or_else(|| ConstructionError::Budget(format!("value {x:e} out of range")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConstructionParams {
    /// Seed for the sample points of the mean-motion measurement.
    pub seed: u64,
    /// Resolution of the `C⁰`/`C¹` closeness and commutation grids.
    pub check_grid: usize,
    /// Resolution of the orbit-density grid.
    pub density_grid: usize,
    /// Resolution of the `f_n^{q_n} = Id` grid.
    pub periodicity_grid: usize,
    pub max_stages: usize,
    /// Largest allowed bit length of `q_n`.
    pub q_cap_bits: u64,
    /// Smallest `r_{n+1}` tried.
    pub r_start: u64,
    /// Fraction of `1/q_{n+1}` kept between the marker offsets and the grid.
    pub transversality_floor: f64,
    pub max_r_attempts: usize,
    pub bmm_samples: usize,
    pub bmm_steps: usize,
}

impl Default for ConstructionParams {
    fn default() -> Self {
        ConstructionParams {
            seed: 0,
            check_grid: 8,
            density_grid: 8,
            periodicity_grid: 64,
            max_stages: 3,
            q_cap_bits: 2048,
            r_start: 1,
            transversality_floor: 0.1,
            max_r_attempts: 40,
            bmm_samples: 16,
            bmm_steps: 200,
        }
    }
}

impl ConstructionParams {
    pub fn validate(&self) -> Result<(), ConstructionError> {
        let positive = [
            ("check_grid", self.check_grid),
            ("density_grid", self.density_grid),
            ("periodicity_grid", self.periodicity_grid),
            ("max_stages", self.max_stages),
            ("max_r_attempts", self.max_r_attempts),
            ("bmm_samples", self.bmm_samples),
            ("bmm_steps", self.bmm_steps),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(ConstructionError::InvalidArgument(format!("{name} must be positive")));
            }
        }
        if self.q_cap_bits == 0 || self.r_start == 0 {
            return Err(ConstructionError::InvalidArgument("caps must be positive".into()));
        }
        if !(self.transversality_floor > 0.0 && self.transversality_floor < 0.5) {
            return Err(ConstructionError::InvalidArgument("transversality floor must lie in (0, 1/2)".into()));
        }
        Ok(())
    }
}

/// Data of one advancement `n → n+1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub sigma: f64,
    pub kappa: f64,
    pub v: String,
    pub r: String,
    /// `m_{n+1} = k·q_n`
    pub k: String,
    pub gamma_norm: f64,
    pub attempts: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageState {
    pub n: usize,
    /// `q_1, …, q_n`
    pub qs: Vec<BigInt>,
    pub omega_hat: [BigInt; 2],
    pub omega: [BigRational; 2],
    /// `h_1, …, h_n`
    pub hs: Vec<AreaPreservingMap>,
    pub x: [BigRational; 2],
    pub y: [BigRational; 2],
    pub probe_x: [BigRational; 2],
    pub probe_y: [BigRational; 2],
    pub m: BigInt,
    pub epsilon: f64,
    pub tau: f64,
    pub steps: Vec<StepRecord>,
}

/// Slacks of the four stability conditions, each converted to an allowed
/// perturbation size.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpsilonBreakdown {
    pub bmm: f64,
    pub separation: f64,
    pub arithmetic: f64,
    pub density: f64,
    pub epsilon: f64,
}

impl StageState {
    /// Stage one: `h₁ = Id`, `ω₁ = (1/100, 1/10)`.
    pub fn initial() -> Result<Self, ConstructionError> {
        let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        let q = BigInt::from(100);
        let x = [r(1, 4), r(1, 4)];
        let y = [r(1, 4) + r(3, 500), r(1, 4) + r(9, 2000)];
        let omega_hat = [BigInt::from(1), BigInt::from(10)];
        let mut s = StageState {
            n: 1,
            omega: [
                BigRational::new(omega_hat[0].clone(), q.clone()),
                BigRational::new(omega_hat[1].clone(), q.clone()),
            ],
            omega_hat,
            qs: vec![q.clone()],
            hs: vec![AreaPreservingMap::identity()],
            probe_x: x.clone(),
            probe_y: y.clone(),
            tau: transversality(&x, &y, &q),
            x,
            y,
            m: BigInt::one(),
            epsilon: 0.0,
            steps: Vec::new(),
        };
        s.epsilon = s.epsilon_breakdown()?.epsilon;
        Ok(s)
    }

    pub fn q(&self) -> &BigInt {
        self.qs.last().expect("nonempty")
    }

    /// `H_n = h_1 ∘ … ∘ h_n`.
    pub fn conjugacy(&self) -> AreaPreservingMap {
        self.hs.iter().rev().fold(AreaPreservingMap::identity(), |acc, h| acc.then(h))
    }

    fn translation(v: &[BigRational; 2]) -> AreaPreservingMap {
        AreaPreservingMap::single(Generator::translation(v.clone()))
    }

    /// `f_n = H_n T_{ω_n} H_n⁻¹`.
    pub fn map(&self) -> AreaPreservingMap {
        Self::translation(&self.omega).conjugate(&self.conjugacy())
    }

    /// `f_n^m`, see [`conjugated_power`].
    pub fn power_map(&self, m: &BigInt) -> AreaPreservingMap {
        conjugated_power(&self.conjugacy(), &self.omega, m).0
    }

    /// `mω_n mod ℤ²` in `[0, 1)²`.
    pub fn reduced_multiple(&self, m: &BigInt) -> [BigRational; 2] {
        let mr = BigRational::from_integer(m.clone());
        [frac(&(&self.omega[0] * &mr)), frac(&(&self.omega[1] * &mr))]
    }

    /// Certified `Σ d_{C⁰}(h̃_i, Id)`.
    pub fn c0_sum(&self) -> f64 {
        self.hs.iter().map(|h| h.displacement_bound().unwrap_or(f64::INFINITY)).sum()
    }

    pub fn lipschitz(&self) -> (f64, f64) {
        let h = self.conjugacy();
        (h.lipschitz_bound(), h.inverse().lipschitz_bound())
    }

    /// `d(f_n^{m_n}(x^{(n)}), f_n^{m_n}(y^{(n)}))`, through `H_n T_{m_nω_n} H_n⁻¹`.
    pub fn witness_separation(&self) -> f64 {
        let h = self.conjugacy();
        let hi = h.inverse();
        let shift = self.reduced_multiple(&self.m);
        let go = |p: &[BigRational; 2]| h.eval(add_hp(&hi.eval(hp(p)), &shift));
        torus_dist(&go(&self.probe_x), &go(&self.probe_y))
    }

    pub fn marker_separation(&self) -> f64 {
        let h = self.conjugacy();
        torus_dist(&h.eval(hp(&self.x)), &h.eval(hp(&self.y)))
    }

    /// `min |k₁ŵ₁ + k₂ŵ₂ + k₃q| / q` over `{−N..N}³ ∖ 0`, with `N = n` by default.
    pub fn arithmetic_gap(&self, range: i64) -> f64 {
        let q = self.q();
        let mut best: Option<BigInt> = None;
        for k1 in -range..=range {
            for k2 in -range..=range {
                let partial = &self.omega_hat[0] * k1 + &self.omega_hat[1] * k2;
                for k3 in -range..=range {
                    if k1 == 0 && k2 == 0 && k3 == 0 {
                        continue;
                    }
                    let v = (&partial + q * k3).abs();
                    if best.as_ref().map_or(true, |b| v < *b) {
                        best = Some(v);
                    }
                }
            }
        }
        ratio_to_f64(&BigRational::new(best.unwrap_or_default(), q.clone()))
    }

    /// Covering radius of the orbit `{kω_n}` and the density radius of `f_n`
    /// orbits it certifies.
    pub fn density_radius(&self) -> (f64, f64) {
        let r = covering_radius(&orbit_lattice(&self.omega_hat, self.q()), self.q());
        (r, self.conjugacy().lipschitz_bound() * r)
    }

    pub fn epsilon_breakdown(&self) -> Result<EpsilonBreakdown, ConstructionError> {
        let n = self.n as f64;
        let (l, li) = self.lipschitz();
        let ll = l * li;
        let m = self.m.to_f64().unwrap_or(f64::INFINITY);
        let q = self.q().to_f64().unwrap_or(f64::INFINITY);
        // ε-perturbations of f_n move the k-th iterate by at most k·Lip(H)·Lip(H⁻¹)·ε
        let bmm = (BMM_LIMIT - 2.0 * self.c0_sum()) / (n * (ll + 1.0));
        let separation = (self.witness_separation() - SEPARATION) / (m * ll);
        let arithmetic = self.arithmetic_gap(self.n as i64) / (2.0 * n);
        let density = (pow2(1 - self.n as i32) - self.density_radius().1) / (q * ll);
        let epsilon = 0.5 * bmm.min(separation).min(arithmetic).min(density);
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(ConstructionError::Validation(format!(
                "no positive stability margin (bmm {bmm:e}, separation {separation:e}, arithmetic {arithmetic:e}, density {density:e})"
            )));
        }
        Ok(EpsilonBreakdown {
            bmm,
            separation,
            arithmetic,
            density,
            epsilon,
        })
    }

    /// Structural invariants, checked before any stage work.
    pub fn validate(&self) -> Result<(), ConstructionError> {
        let bad = |s: String| Err(ConstructionError::Validation(s));
        if self.n == 0 || self.qs.len() != self.n || self.hs.len() != self.n {
            return bad(format!("stage {} with {} denominators and {} factors", self.n, self.qs.len(), self.hs.len()));
        }
        let q = self.q();
        for (i, w) in self.omega.iter().enumerate() {
            if *w != BigRational::new(self.omega_hat[i].clone(), q.clone()) {
                return bad(format!("omega component {i} is not omega_hat/q"));
            }
        }
        for (i, qi) in self.qs.iter().enumerate() {
            if *qi <= num_traits::pow(BigInt::from(10), i + 1) {
                return bad(format!("q_{} = {qi} is not above 10^{}", i + 1, i + 1));
            }
            if i > 0 && !qi.is_multiple_of(&self.qs[i - 1]) {
                return bad(format!("q_{} does not divide q_{}", i, i + 1));
            }
        }
        if !self.hs[0].is_identity() {
            return bad("h_1 must be the identity".into());
        }
        for (i, h) in self.hs.iter().enumerate().skip(1) {
            for g in h.generators() {
                let ok = match g {
                    Generator::ShearX(p) | Generator::ShearY(p) => p.q() == &self.qs[i - 1],
                    Generator::Translation(v) => {
                        let qr = BigRational::from_integer(self.qs[i - 1].clone());
                        v.iter().all(|c| (c.value() * &qr).is_integer())
                    }
                    Generator::Linear(_) => false,
                };
                if !ok {
                    return bad(format!("h_{} is not a 1/q_{} periodic factor", i + 1, i));
                }
            }
        }
        let d = torus_dist(&hp(&self.x), &hp(&self.y));
        if !(d < 10f64.powi(-2 * self.n as i32)) {
            return bad(format!("marker distance {d:e} is not below 10^-{}", 2 * self.n));
        }
        let tau = transversality(&self.x, &self.y, q);
        if !(self.tau > 0.0) || (tau - self.tau).abs() > 1e-9 * tau {
            return bad(format!("transversality {} does not match the markers ({tau:e})", self.tau));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return bad("epsilon must be positive".into());
        }
        if !self.m.is_positive() {
            return bad("witness exponent must be positive".into());
        }
        Ok(())
    }

    /// Checks `(a1)`–`(a5)` of this stage.
    pub fn checks(&self, params: &ConstructionParams) -> Vec<Check> {
        let n = self.n;
        let mut out = Vec::new();
        for (i, h) in self.hs.iter().enumerate() {
            out.push(Check::below(
                "a1",
                n,
                format!("certified d_C0(h~_{}, Id)", i + 1),
                h.displacement_bound().unwrap_or(f64::INFINITY),
                pow2(-(i as i32 + 1)),
            ));
        }
        out.push(Check::below("a1", n, "certified sum d_C0(h~_i, Id)".into(), self.c0_sum(), 1.0 - pow2(-(n as i32))));
        out.push(Check::above("a1", n, format!("q_{n}"), self.q().to_f64().unwrap_or(f64::INFINITY), 10f64.powi(n as i32)));
        out.push(Check::below(
            "a2",
            n,
            "d(x_n, y_n)".into(),
            torus_dist(&hp(&self.x), &hp(&self.y)),
            10f64.powi(-2 * n as i32),
        ));
        out.push(Check::above("a2", n, "d(H_n x_n, H_n y_n)".into(), self.marker_separation(), SEPARATION));
        out.push(Check::above("a2", n, "transversality of x_n - y_n".into(), self.tau, 0.0));
        out.push(Check::below(
            "a3",
            n,
            "d(x^(n), y^(n))".into(),
            torus_dist(&hp(&self.probe_x), &hp(&self.probe_y)),
            pow2(-(n as i32)),
        ));
        out.push(Check::above("a3", n, format!("separation at m_n = {}", self.m), self.witness_separation(), SEPARATION));
        let gap = self.arithmetic_gap(n as i64);
        out.push(Check::exact("a4", n, "min |k.omega + k3| over {-n..n}^3 minus 0".into(), gap, gap > 0.0));
        let (cov, dens) = self.density_radius();
        out.push(Check::below("a5", n, "Lip(H_n) * covering radius of {k omega_n}".into(), dens, pow2(-(n as i32))));
        out.push(Check::below(
            "a5",
            n,
            format!("grid distance to one f_n orbit (lattice covering radius {cov:.3e})"),
            self.grid_density(params.density_grid),
            pow2(-(n as i32)),
        ));
        out
    }

    /// Largest distance from a grid target to the `f_n`-orbit of a base point.
    pub fn grid_density(&self, resolution: usize) -> f64 {
        let h = self.conjugacy();
        let hi = h.inverse();
        let q = self.q().clone();
        let basis = orbit_lattice(&self.omega_hat, &q);
        let base = hi.eval([Hp::from_f64(0.1), Hp::from_f64(0.2)]);
        let qr = BigRational::from_integer(q);
        GridSpec::new(resolution)
            .points()
            .into_par_iter()
            .map(|t| {
                let target = [Hp::from_f64(t[0]), Hp::from_f64(t[1])];
                let u = hi.eval(target.clone());
                let diff = [
                    (u[0].clone() - base[0].clone()).to_ratio() * &qr,
                    (u[1].clone() - base[1].clone()).to_ratio() * &qr,
                ];
                let (p, _) = nearest_point(&basis, &diff);
                let step = [BigRational::new(p[0].clone(), qr.to_integer()), BigRational::new(p[1].clone(), qr.to_integer())];
                torus_dist(&h.eval(add_hp(&base, &step)), &target)
            })
            .reduce(|| 0.0, f64::max)
    }

    /// `max d(f_n^{q_n}(z), z)` on a grid. `q_nω_n` is an integer vector, so
    /// the map is `H_n H_n⁻¹` on the torus once the integer part is dropped.
    pub fn periodicity_error(&self, resolution: usize) -> Result<f64, ConstructionError> {
        let shift = self.reduced_multiple(self.q());
        if shift.iter().any(|c| !c.is_zero()) {
            return Err(ConstructionError::Validation("q_n omega_n is not an integer vector".into()));
        }
        let h = self.conjugacy();
        let hi = h.inverse();
        Ok(GridSpec::new(resolution)
            .points()
            .into_par_iter()
            .map(|p| {
                let z = [Hp::from_f64(p[0]), Hp::from_f64(p[1])];
                torus_dist(&h.eval(add_hp(&hi.eval(z.clone()), &shift)), &z)
            })
            .reduce(|| 0.0, f64::max))
    }
}

/// `H T_{mω} H⁻¹` with the translation reduced to `(−1/2, 1/2]²`, and that
/// translation vector. Equal to the `m`-th power on the torus; the lift is the
/// one with the smallest rotation vector.
pub fn conjugated_power(
    h: &AreaPreservingMap,
    omega: &[BigRational; 2],
    m: &BigInt,
) -> (AreaPreservingMap, [BigRational; 2]) {
    let mr = BigRational::from_integer(m.clone());
    let v = [min_rep(&(&omega[0] * &mr)), min_rep(&(&omega[1] * &mr))];
    (StageState::translation(&v).conjugate(h), v)
}

/// `min_i dist(y_i − x_i, (1/q)ℤ)`.
fn transversality(x: &[BigRational; 2], y: &[BigRational; 2], q: &BigInt) -> f64 {
    (0..2)
        .map(|i| ratio_to_f64(&dist_to_grid(&(&y[i] - &x[i]), q)))
        .fold(f64::INFINITY, f64::min)
}

/// Max over the grid of `(‖F − F'‖, ‖DF − DF'‖)` on lifts.
fn closeness(a: &AreaPreservingMap, b: &AreaPreservingMap, resolution: usize) -> (f64, f64) {
    GridSpec::new(resolution)
        .points()
        .into_par_iter()
        .map(|p| {
            let z = [Hp::from_f64(p[0]), Hp::from_f64(p[1])];
            let (fa, fb) = (a.eval(z.clone()), b.eval(z.clone()));
            let c0 = (fa[0].clone() - fb[0].clone()).hypot(&(fa[1].clone() - fb[1].clone())).to_f64();
            let (ja, jb) = (a.jacobian(z.clone()), b.jacobian(z));
            let d = |i: usize, j: usize| (ja[i][j].clone() - jb[i][j].clone()).to_f64();
            let c1 = crate::torusmap::operator_norm([[d(0, 0), d(0, 1)], [d(1, 0), d(1, 1)]]);
            (c0, c1)
        })
        .reduce(|| (0.0, 0.0), |x, y| (x.0.max(y.0), x.1.max(y.1)))
}

/// Searches `r, r+1, …` for a value keeping both marker offsets at least
/// `floor/q` away from `(1/q)ℤ` with `q = q_n r`.
fn transversal_r(start: &BigInt, qn: &BigInt, offsets: &[BigRational; 2], floor: f64) -> Option<BigInt> {
    let floor_r = BigRational::from_float(floor).expect("finite");
    let mut r = start.clone();
    for _ in 0..1000 {
        let q = qn * &r;
        let qr = BigRational::from_integer(q.clone());
        if offsets.iter().all(|o| dist_to_grid(o, &q) * &qr >= floor_r) {
            return Some(r);
        }
        r += 1;
    }
    None
}

struct Candidate {
    r: BigInt,
    q: BigInt,
    omega_hat: [BigInt; 2],
    k: BigInt,
    gamma_norm: f64,
    checks: Vec<Check>,
}

/// Advances `state` by one stage.
pub fn advance_stage(
    state: &StageState,
    params: &ConstructionParams,
) -> Result<(StageState, StageRecord), ConstructionError> {
    state.validate()?;
    params.validate()?;
    let n = state.n;
    if n + 1 > params.max_stages {
        return Err(ConstructionError::Budget(format!(
            "stage {} exceeds the stage cap {}",
            n + 1,
            params.max_stages
        )));
    }
    let qn = state.q().clone();
    let hn = state.conjugacy();
    let sigma = 10f64.powi(-2 * n as i32 - 4) / hn.lipschitz_bound().max(1.0);
    let built = build_h(&qn, &state.x, &state.y, sigma, state.tau * (1.0 - 1e-9))?;
    let h = built.h.clone();
    let big_h = hn.compose(&h);
    let lip = big_h.lipschitz_bound();

    let mut checks = Vec::new();
    let marker_shift = torus_dist(&big_h.eval(hp(&built.x_prime)), &hn.eval(hp(&state.x)))
        .max(torus_dist(&big_h.eval(hp(&built.y_prime)), &hn.eval(hp(&state.y))));
    checks.push(Check::below("markers", n + 1, "d(H_{n+1} z_{n+1}, H_n z_n)".into(), marker_shift, 1e-9));
    let t_omega = StageState::translation(&state.omega);
    // grid points miss the narrow bumps, so the markers are sampled too
    let mut points: Vec<[Hp; 2]> = GridSpec::new(params.check_grid)
        .points()
        .into_iter()
        .map(|p| [Hp::from_f64(p[0]), Hp::from_f64(p[1])])
        .collect();
    points.extend([hp(&built.x_prime), hp(&built.y_prime), hp(&state.x), hp(&state.y)]);
    let commutation = points
        .into_par_iter()
        .map(|z| torus_dist(&h.eval(t_omega.eval(z.clone())), &t_omega.eval(h.eval(z))))
        .reduce(|| 0.0, f64::max);
    checks.push(Check::below("commutation", n + 1, "d(h T_omega, T_omega h)".into(), commutation, 1e-10));
    checks.push(Check::below(
        "step",
        n + 1,
        "probe distance after h".into(),
        built.report.probe_distance,
        sigma,
    ));
    checks.push(Check::below(
        "step",
        n + 1,
        "certified d_C0(h~, Id) vs 3d + 2/q".into(),
        built.report.certified_c0,
        built.report.c0_bound,
    ));

    // continuity radius of the separation under G^γ
    let s0 = torus_dist(&big_h.eval(hp(&built.x_prime)), &big_h.eval(hp(&built.y_prime)));
    let margin = s0 - SEPARATION;
    let kappa = 0.9 * (margin / (2.0 * lip)).min(pow2(-(n as i32) - 1) / lip);
    if !(kappa > 0.0) || !kappa.is_finite() || kappa < 1e-290 {
        return Err(ConstructionError::KappaCollapsed { margin, lipschitz: lip });
    }
    let kappa_r = BigRational::from_float(kappa).expect("finite");
    let ring = (0..8)
        .map(|j| {
            let t = std::f64::consts::TAU * j as f64 / 8.0;
            let g = [
                BigRational::from_float(kappa * t.cos()).expect("finite"),
                BigRational::from_float(kappa * t.sin()).expect("finite"),
            ];
            let a = big_h.eval(add_hp(&hp(&built.x_prime), &g));
            let b = big_h.eval(add_hp(&hp(&built.y_prime), &g));
            torus_dist(&a, &b)
        })
        .fold(f64::INFINITY, f64::min);
    checks.push(Check::above("kappa", n + 1, format!("separation on the kappa = {kappa:e} circle"), ring, SEPARATION));

    // v > 100·max(1/κ, n+1) and r ≥ 100(n+1)²v/κ
    let v: BigInt = BigInt::from_f64((100.0 * (1.0 / kappa).max((n + 1) as f64)).floor())
        .ok_or_else(|| ConstructionError::KappaCollapsed { margin, lipschitz: lip })?
        + 1;
    let r_floor = (BigRational::from_integer(&v * BigInt::from(100 * (n + 1) * (n + 1))) / &kappa_r)
        .ceil()
        .to_integer();
    let vf = v.to_f64().unwrap_or(f64::INFINITY);
    let qf = qn.to_f64().unwrap_or(f64::INFINITY);
    let eps = state.epsilon;
    // ‖β‖ < 2⁻ⁿε_n and Lip(H_{n+1})‖β‖ < 2^{−n−1}ε_n with ‖β‖ = ‖(1, v)‖/(q_n r)
    let beta_needed = (pow2(-(n as i32)) * eps).min(pow2(-(n as i32) - 1) * eps / lip.max(1.0));
    let r_eps = big_from_f64_ceil(2.0 * vf.hypot(1.0) / (qf * beta_needed))?;
    let mut r = r_floor.clone().max(r_eps).max(BigInt::from(params.r_start));

    let yp_rel = [&built.y_prime[0] - &built.x_prime[0], &built.y_prime[1] - &built.x_prime[1]];
    let f_n = state.map();
    let mut jump = 1usize;
    let mut last_reason = String::new();
    let mut chosen: Option<Candidate> = None;
    let mut attempts = 0;
    while attempts < params.max_r_attempts {
        attempts += 1;
        let Some(rr) = transversal_r(&r, &qn, &yp_rel, params.transversality_floor) else {
            last_reason = "no transversal r near the candidate".into();
            r <<= jump;
            jump *= 2;
            continue;
        };
        let q_next = &qn * &rr;
        if q_next.bits() > params.q_cap_bits {
            return Err(ConstructionError::RSearch {
                attempts,
                bits: q_next.bits(),
                reason: if last_reason.is_empty() {
                    format!("q_{} needs more than {} bits", n + 1, params.q_cap_bits)
                } else {
                    last_reason
                },
            });
        }
        match try_candidate(state, params, &big_h, lip, kappa, &kappa_r, &v, &rr, &f_n) {
            Ok(c) if c.checks.iter().all(|c| c.pass) => {
                chosen = Some(c);
                break;
            }
            Ok(c) => {
                last_reason = c
                    .checks
                    .iter()
                    .filter(|c| !c.pass)
                    .map(|c| format!("{} {}", c.condition, c.quantity))
                    .collect::<Vec<_>>()
                    .join("; ");
            }
            Err(e) => last_reason = e.to_string(),
        }
        r = rr << jump;
        jump = (jump * 2).min(256);
    }
    let Some(c) = chosen else {
        return Err(ConstructionError::RSearch {
            attempts,
            bits: (&qn * &r).bits(),
            reason: last_reason,
        });
    };
    checks.extend(c.checks);

    let shift = [BigRational::new(BigInt::one(), &qn * 2), BigRational::zero()];
    let probe = |z: &[BigRational; 2]| {
        let p = big_h.eval(add_hp(&hp(z), &shift));
        [frac(&p[0].to_ratio()), frac(&p[1].to_ratio())]
    };
    let mut hs = state.hs.clone();
    hs.push(h);
    let mut qs = state.qs.clone();
    qs.push(c.q.clone());
    let mut steps = state.steps.clone();
    steps.push(StepRecord {
        sigma,
        kappa,
        v: v.to_string(),
        r: c.r.to_string(),
        k: c.k.to_string(),
        gamma_norm: c.gamma_norm,
        attempts,
    });
    let mut next = StageState {
        n: n + 1,
        omega: [
            BigRational::new(c.omega_hat[0].clone(), c.q.clone()),
            BigRational::new(c.omega_hat[1].clone(), c.q.clone()),
        ],
        omega_hat: c.omega_hat,
        tau: transversality(&built.x_prime, &built.y_prime, &c.q),
        qs,
        hs,
        probe_x: probe(&built.x_prime),
        probe_y: probe(&built.y_prime),
        x: built.x_prime,
        y: built.y_prime,
        m: &c.k * &qn,
        epsilon: 0.0,
        steps,
    };
    let breakdown = next.epsilon_breakdown()?;
    next.epsilon = breakdown.epsilon;
    let mut stage_checks = next.checks(params);
    stage_checks.extend(checks);
    Ok((
        next,
        StageRecord {
            stage: n + 1,
            checks: stage_checks,
            epsilon: breakdown,
            build: Some(built.report),
        },
    ))
}

#[allow(clippy::too_many_arguments)]
fn try_candidate(
    state: &StageState,
    params: &ConstructionParams,
    big_h: &AreaPreservingMap,
    lip: f64,
    kappa: f64,
    kappa_r: &BigRational,
    v: &BigInt,
    r: &BigInt,
    f_n: &AreaPreservingMap,
) -> Result<Candidate, ConstructionError> {
    let n = state.n;
    let qn = state.q();
    let q = qn * r;
    let omega_hat = [&state.omega_hat[0] * r + 1, &state.omega_hat[1] * r + v];
    let omega = [
        BigRational::new(omega_hat[0].clone(), q.clone()),
        BigRational::new(omega_hat[1].clone(), q.clone()),
    ];
    let eps = state.epsilon;
    let mut checks = Vec::new();

    let beta = ratio_to_f64(&BigRational::new(BigInt::one(), q.clone())) * v.to_f64().unwrap_or(f64::INFINITY).hypot(1.0);
    checks.push(Check::below("a6", n, "|beta_{n+1}|".into(), beta, pow2(-(n as i32)) * eps));
    checks.push(Check::below(
        "a6",
        n,
        "certified d_C0(F_{n+1}, F_n) <= Lip(H_{n+1}) |beta|".into(),
        lip * beta,
        pow2(-(n as i32) - 1) * eps,
    ));

    // (a4) exactly, over {−(n+1)..n+1}³ ∖ 0
    let range = (n + 1) as i64;
    let mut zero = false;
    'outer: for k1 in -range..=range {
        for k2 in -range..=range {
            let partial = &omega_hat[0] * k1 + &omega_hat[1] * k2;
            for k3 in -range..=range {
                if (k1, k2, k3) != (0, 0, 0) && (&partial + &q * k3).is_zero() {
                    zero = true;
                    break 'outer;
                }
            }
        }
    }
    checks.push(Check::exact("a4", n + 1, "k.omega_{n+1} + k3 != 0 (exact)".into(), if zero { 0.0 } else { 1.0 }, !zero));

    let cov = covering_radius(&orbit_lattice(&omega_hat, &q), &q);
    checks.push(Check::below("a5", n + 1, "covering radius of {k omega_{n+1}}".into(), cov, kappa));

    // (a3): (k, kv)/r ≡ (−1/(2q_n), 0) + γ with ‖γ‖ < κ
    let basis = [[BigInt::one(), v.clone()], [BigInt::zero(), r.clone()]];
    let target = [-BigRational::new(r.clone(), qn * 2), BigRational::zero()];
    let (p, d2) = nearest_point(&basis, &target);
    let k = p[0].mod_floor(r);
    let rr = BigRational::from_integer(r.clone());
    let gamma_norm = ratio_to_f64(&(d2 / (&rr * &rr))).sqrt();
    checks.push(Check::below("a3", n + 1, "|gamma| of the witness".into(), gamma_norm, kappa));
    let gamma_ok = BigRational::from_float(gamma_norm).map_or(false, |g| &g < kappa_r);
    let k = if k.is_zero() { r.clone() } else { k };
    if !gamma_ok || k.is_zero() {
        return Ok(Candidate {
            r: r.clone(),
            q,
            omega_hat,
            k,
            gamma_norm,
            checks,
        });
    }

    let f_next = StageState::translation(&omega).conjugate(big_h);
    let (c0, c1) = closeness(&f_next, f_n, params.check_grid);
    checks.push(Check::below("a6", n, "grid d_C0(F_{n+1}, F_n)".into(), c0, pow2(-(n as i32) - 1) * eps));
    checks.push(Check::below("a6", n, "grid d_C1(f_{n+1}, f_n)".into(), c1, pow2(-(n as i32) - 1) * eps));
    Ok(Candidate {
        r: r.clone(),
        q,
        omega_hat,
        k,
        gamma_norm,
        checks,
    })
}

/// Runs stages `1..=stages` and assembles the final report.
pub fn counterexample(
    stages: usize,
    params: &ConstructionParams,
) -> Result<(AreaPreservingMap, StageState, ConstructionReport), ConstructionError> {
    params.validate()?;
    if stages == 0 {
        return Err(ConstructionError::InvalidArgument("at least one stage is required".into()));
    }
    if stages > params.max_stages {
        return Err(ConstructionError::Budget(format!(
            "{stages} stages requested, cap is {}",
            params.max_stages
        )));
    }
    let mut state = StageState::initial()?;
    let mut records = vec![StageRecord {
        stage: 1,
        checks: state.checks(params),
        epsilon: state.epsilon_breakdown()?,
        build: None,
    }];
    while state.n < stages {
        let (next, rec) = advance_stage(&state, params)?;
        records.push(rec);
        state = next;
    }
    let map = state.map();
    let report = final_report(&state, records, params)?;
    Ok((map, state, report))
}

fn final_report(
    state: &StageState,
    records: Vec<StageRecord>,
    params: &ConstructionParams,
) -> Result<ConstructionReport, ConstructionError> {
    let f = state.map();
    let rho = [ratio_to_f64(&state.omega[0]), ratio_to_f64(&state.omega[1])];
    let mut rng = crate::sampling::stream_rng(params.seed, 0);
    let offset: [f64; 2] = {
        use rand::Rng;
        [rng.gen(), rng.gen()]
    };
    let samples: Vec<[f64; 2]> = r2_points(params.bmm_samples)
        .into_iter()
        .map(|p| [(p[0] + offset[0]).fract(), (p[1] + offset[1]).fract()])
        .collect();
    let series = if state.n <= 2 {
        deviation_series_in::<f64>(&f, rho, &samples, params.bmm_steps, None)
    } else {
        deviation_series_in::<Hp>(&f, rho, &samples, params.bmm_steps, None)
    };
    let periodicity = state.periodicity_error(params.periodicity_grid)?;
    let omega_vec = Vector2::rational(state.omega[0].clone(), state.omega[1].clone());
    let liouville = state.qs[..state.n - 1]
        .iter()
        .map(|qj| {
            let score = super_liouville_score_at(&omega_vec, qj, 1.0).unwrap_or(f64::NAN);
            (qj.to_string(), ln_bigint(qj), score)
        })
        .collect();
    let witness = Witness {
        x: [state.probe_x[0].to_string(), state.probe_x[1].to_string()],
        y: [state.probe_y[0].to_string(), state.probe_y[1].to_string()],
        m: state.m.to_string(),
        distance: torus_dist(&hp(&state.probe_x), &hp(&state.probe_y)),
        separation: state.witness_separation(),
    };
    let c0 = state.c0_sum();
    let mut checks = vec![
        Check::below("bmm", state.n, "measured kappa_hat".into(), series.kappa(), BMM_LIMIT),
        Check::below("bmm", state.n, "certified 2 d_C0(H~_n, Id)".into(), 2.0 * c0, BMM_LIMIT),
        Check::below("periodicity", state.n, "max d(f_n^{q_n}(z), z)".into(), periodicity, 1e-9),
    ];
    checks.extend(records.iter().flat_map(|r| r.checks.iter().cloned()));
    Ok(ConstructionReport {
        stages: state.n,
        q: state.q().to_string(),
        omega: [state.omega[0].to_string(), state.omega[1].to_string()],
        kappa_hat: series.kappa(),
        bmm_certified: 2.0 * c0,
        witness,
        periodicity_error: periodicity,
        liouville,
        records,
        checks,
        relaxation: "(a6) is enforced in C0 and C1 on a grid, not in the C-infinity topology",
    })
}

#[derive(Serialize, Deserialize)]
struct StateRecord {
    stage: usize,
    q: Vec<String>,
    omega_hat: [String; 2],
    omega: [String; 2],
    x: [String; 2],
    y: [String; 2],
    probe_x: [String; 2],
    probe_y: [String; 2],
    m: String,
    epsilon: f64,
    tau: f64,
    steps: Vec<StepRecord>,
    h: Vec<serde_json::Value>,
}

fn strs(p: &[BigRational; 2]) -> [String; 2] {
    [p[0].to_string(), p[1].to_string()]
}

impl StageState {
    pub fn to_json(&self) -> String {
        let rec = StateRecord {
            stage: self.n,
            q: self.qs.iter().map(|q| q.to_string()).collect(),
            omega_hat: [self.omega_hat[0].to_string(), self.omega_hat[1].to_string()],
            omega: strs(&self.omega),
            x: strs(&self.x),
            y: strs(&self.y),
            probe_x: strs(&self.probe_x),
            probe_y: strs(&self.probe_y),
            m: self.m.to_string(),
            epsilon: self.epsilon,
            tau: self.tau,
            steps: self.steps.clone(),
            h: self.hs.iter().map(map_to_value).collect(),
        };
        serde_json::to_string_pretty(&rec).expect("serialisable")
    }

    /// Parses and validates a state written by [`StageState::to_json`].
    pub fn from_json(text: &str) -> Result<Self, ConstructionError> {
        let rec: StateRecord = serde_json::from_str(text).map_err(|e| TorusMapError::Parse {
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        })?;
        let int = |s: &str| s.parse::<BigInt>().map_err(|_| ConstructionError::Validation(format!("bad integer `{s}`")));
        let rat = |s: &str| parse_rational(s).ok_or_else(|| ConstructionError::Validation(format!("bad rational `{s}`")));
        let pair = |p: &[String; 2]| -> Result<[BigRational; 2], ConstructionError> { Ok([rat(&p[0])?, rat(&p[1])?]) };
        let state = StageState {
            n: rec.stage,
            qs: rec.q.iter().map(|s| int(s)).collect::<Result<_, _>>()?,
            omega_hat: [int(&rec.omega_hat[0])?, int(&rec.omega_hat[1])?],
            omega: pair(&rec.omega)?,
            hs: rec.h.into_iter().map(map_from_value).collect::<Result<_, _>>()?,
            x: pair(&rec.x)?,
            y: pair(&rec.y)?,
            probe_x: pair(&rec.probe_x)?,
            probe_y: pair(&rec.probe_y)?,
            m: int(&rec.m)?,
            epsilon: rec.epsilon,
            tau: rec.tau,
            steps: rec.steps,
        };
        state.validate()?;
        Ok(state)
    }
}
