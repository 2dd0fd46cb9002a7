//! Area-preserving diffeomorphisms of `𝕋²` stored as generator sequences.
//!
//! A map is a list of generators applied left to right on lifts. Every
//! generator has a closed-form inverse and Jacobian, so inverses are exact
//! and area preservation holds by construction.

mod generator;
mod io;
mod profile;

pub use generator::{mat_inv, mat_mul, operator_norm, Generator, Matrix, IDENTITY};
pub use io::{map_from_value, map_to_value, read_map, write_map, MapDocument};
pub use profile::{bump, bump_derivative, Bump, PeriodicProfile, BUMP_DERIVATIVE_MAX};

use rayon::prelude::*;
use thiserror::Error;

use crate::real::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TorusMapError {
    #[error("not isotopic to identity: linear part {0:?}")]
    NotIsotopic(Matrix),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error("invalid map file: {0}")]
    Schema(String),
}

/// Uniform `G × G` grid on `[0,1)²`, points `((i + o₁)/G, (j + o₂)/G)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub resolution: usize,
    pub offset: [f64; 2],
}

impl GridSpec {
    pub fn new(resolution: usize) -> Self {
        assert!(resolution >= 2, "grid resolution must be at least 2");
        GridSpec {
            resolution,
            offset: [0.5, 0.5],
        }
    }

    pub fn with_offset(resolution: usize, offset: [f64; 2]) -> Self {
        GridSpec {
            offset,
            ..Self::new(resolution)
        }
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.resolution as f64
    }

    /// Largest distance from a point of the torus to the grid.
    pub fn covering_radius(&self) -> f64 {
        self.spacing() * std::f64::consts::FRAC_1_SQRT_2
    }

    pub fn len(&self) -> usize {
        self.resolution * self.resolution
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, k: usize) -> [f64; 2] {
        let g = self.resolution as f64;
        let (i, j) = (k / self.resolution, k % self.resolution);
        [(i as f64 + self.offset[0]) / g, (j as f64 + self.offset[1]) / g]
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }
}

/// Grid estimate together with a certified upper bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct C0Distance {
    pub estimate: f64,
    pub certified: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AreaPreservingMap {
    generators: Vec<Generator>,
    linear: Matrix,
    lipschitz: f64,
    displacement: Option<f64>,
}

impl Default for AreaPreservingMap {
    fn default() -> Self {
        Self::identity()
    }
}

impl AreaPreservingMap {
    pub fn identity() -> Self {
        Self::new(Vec::new())
    }

    pub fn new(generators: Vec<Generator>) -> Self {
        let mut linear = IDENTITY;
        let mut lipschitz = 1.0;
        let mut displacement = Some(0.0);
        for g in &generators {
            linear = mat_mul(&g.linear_part(), &linear);
            lipschitz *= g.lipschitz_bound();
            displacement = match (displacement, g.displacement_bound()) {
                (Some(a), Some(b)) => Some(a + b),
                _ => None,
            };
        }
        AreaPreservingMap {
            generators,
            linear,
            lipschitz,
            displacement,
        }
    }

    pub fn single(g: Generator) -> Self {
        Self::new(vec![g])
    }

    pub fn translation_f64(x: f64, y: f64) -> Self {
        Self::single(Generator::translation_f64(x, y))
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn is_identity(&self) -> bool {
        self.generators.is_empty()
    }

    /// Product `M` of the linear parts, with `F(x + z) = F(x) + Mz`.
    pub fn linear_part(&self) -> Matrix {
        self.linear
    }

    pub fn is_isotopic_to_identity(&self) -> bool {
        self.linear == IDENTITY
    }

    pub fn require_isotopic(&self) -> Result<(), TorusMapError> {
        if self.is_isotopic_to_identity() {
            Ok(())
        } else {
            Err(TorusMapError::NotIsotopic(self.linear))
        }
    }

    /// Certified global Lipschitz constant (product over generators).
    pub fn lipschitz_bound(&self) -> f64 {
        self.lipschitz
    }

    /// Certified `sup ‖F(x) − x‖` as a sum over generators; `None` when a
    /// nontrivial linear generator is present.
    pub fn displacement_bound(&self) -> Option<f64> {
        self.displacement
    }

    pub fn eval<R: Real>(&self, p: [R; 2]) -> [R; 2] {
        self.generators.iter().fold(p, |acc, g| g.apply(acc))
    }

    pub fn eval_f64(&self, p: [f64; 2]) -> [f64; 2] {
        self.eval(p)
    }

    /// `DF(p)` by the chain rule.
    pub fn jacobian<R: Real>(&self, p: [R; 2]) -> [[R; 2]; 2] {
        let (o, z) = (R::one(), R::zero());
        let mut acc = [[o.clone(), z.clone()], [z, o]];
        let mut x = p;
        for g in &self.generators {
            let j = g.jacobian(&x);
            acc = mul2(&j, &acc);
            x = g.apply(x);
        }
        acc
    }

    pub fn inverse(&self) -> Self {
        Self::new(self.generators.iter().rev().map(Generator::inverse).collect())
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        other.then(self)
    }

    /// Apply `self`, then `next`.
    pub fn then(&self, next: &Self) -> Self {
        let mut g = self.generators.clone();
        g.extend(next.generators.iter().cloned());
        Self::new(g)
    }

    /// `h ∘ self ∘ h⁻¹`.
    pub fn conjugate(&self, h: &Self) -> Self {
        h.inverse().then(self).then(h)
    }

    pub fn power(&self, n: usize) -> Self {
        let mut g = Vec::with_capacity(self.generators.len() * n);
        for _ in 0..n {
            g.extend(self.generators.iter().cloned());
        }
        Self::new(g)
    }

    /// Lift orbit `x, F(x), …, Fⁿ(x)`.
    pub fn iterate(&self, x: [f64; 2], n: usize) -> Vec<[f64; 2]> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(x);
        let mut p = x;
        for _ in 0..n {
            p = self.eval(p);
            out.push(p);
        }
        out
    }

    /// `sup ‖F̃(x) − x‖` on the grid, certified by the Lipschitz constant of
    /// `F − Id` and the grid covering radius.
    pub fn c0_distance_to_identity(&self, grid: &GridSpec) -> Result<C0Distance, TorusMapError> {
        self.c0_distance_to_identity_in::<f64>(grid)
    }

    pub fn c0_distance_to_identity_in<R: Real>(&self, grid: &GridSpec) -> Result<C0Distance, TorusMapError> {
        self.require_isotopic()?;
        if self.is_identity() {
            return Ok(C0Distance {
                estimate: 0.0,
                certified: 0.0,
            });
        }
        let estimate = grid
            .points()
            .into_par_iter()
            .map(|p| {
                let x = [R::from_f64(p[0]), R::from_f64(p[1])];
                let y = self.eval(x.clone());
                (y[0].clone() - x[0].clone()).hypot(&(y[1].clone() - x[1].clone())).to_f64()
            })
            .reduce(|| 0.0, f64::max);
        let lip = (self.lipschitz + 1.0) * grid.covering_radius();
        let mut certified = estimate + lip;
        if let Some(d) = self.displacement {
            certified = certified.min(d);
        }
        Ok(C0Distance {
            estimate,
            certified: certified.max(estimate),
        })
    }

    /// Max over the grid of the operator norm of `DF`.
    pub fn c1_norm_estimate(&self, grid: &GridSpec) -> f64 {
        grid.points()
            .into_par_iter()
            .map(|p| operator_norm(self.jacobian(p)))
            .reduce(|| 0.0, f64::max)
    }

    /// Max over the grid of `‖DF − I‖`.
    pub fn c1_distance_to_identity(&self, grid: &GridSpec) -> f64 {
        grid.points()
            .into_par_iter()
            .map(|p| {
                let j = self.jacobian(p);
                operator_norm([[j[0][0] - 1.0, j[0][1]], [j[1][0], j[1][1] - 1.0]])
            })
            .reduce(|| 0.0, f64::max)
    }
}

fn mul2<R: Real>(a: &[[R; 2]; 2], b: &[[R; 2]; 2]) -> [[R; 2]; 2] {
    let e = |i: usize, j: usize| a[i][0].clone() * b[0][j].clone() + a[i][1].clone() * b[1][j].clone();
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

/// `det DF` by central differences.
pub fn finite_difference_det(f: &AreaPreservingMap, p: [f64; 2], h: f64) -> f64 {
    let d = |dx: f64, dy: f64| {
        let a = f.eval([p[0] + dx, p[1] + dy]);
        let b = f.eval([p[0] - dx, p[1] - dy]);
        [(a[0] - b[0]) / (2.0 * h), (a[1] - b[1]) / (2.0 * h)]
    };
    let cx = d(h, 0.0);
    let cy = d(0.0, h);
    cx[0] * cy[1] - cx[1] * cy[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::stream_rng;
    use rand::Rng;

    fn sample_map() -> AreaPreservingMap {
        AreaPreservingMap::new(vec![
            Generator::ShearX(PeriodicProfile::from_f64(2, &[(0.1, 0.1, 0.05)]).unwrap()),
            Generator::translation_f64(0.3, 0.7),
            Generator::ShearY(PeriodicProfile::from_f64(1, &[(0.5, 0.3, -0.08)]).unwrap()),
        ])
    }

    #[test]
    fn identity_and_translation() {
        let id = AreaPreservingMap::identity();
        assert_eq!(id.eval_f64([0.2, 0.9]), [0.2, 0.9]);
        let t = AreaPreservingMap::translation_f64(0.3, 0.7);
        assert_eq!(t.eval_f64([0.0, 0.0]), [0.3, 0.7]);
        let d = t.c0_distance_to_identity(&GridSpec::new(8)).unwrap();
        assert!((d.estimate - 0.761_577_310_586_390_8).abs() < 1e-15);
    }

    #[test]
    fn shear_at_bump_center() {
        let s = AreaPreservingMap::single(Generator::ShearX(
            PeriodicProfile::from_f64(1, &[(0.5, 0.25, 0.1)]).unwrap(),
        ));
        assert_eq!(s.eval_f64([0.0, 0.5]), [0.1, 0.5]);
        let d = s.c0_distance_to_identity(&GridSpec::new(16)).unwrap();
        assert!(d.estimate <= 0.1 && d.certified <= 0.1 + 1e-15);
    }

    #[test]
    fn inverse_roundtrip() {
        let f = sample_map();
        let g = f.inverse();
        let mut rng = stream_rng(7, 0);
        for _ in 0..1000 {
            let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let y = g.eval_f64(f.eval_f64(x));
            assert!((y[0] - x[0]).abs() < 1e-12 && (y[1] - x[1]).abs() < 1e-12);
        }
        assert_eq!(g.inverse(), f);
        assert_eq!(
            AreaPreservingMap::single(Generator::Linear([[1, 1], [0, 1]])).inverse(),
            AreaPreservingMap::single(Generator::Linear([[1, -1], [0, 1]]))
        );
    }

    #[test]
    fn jacobian_and_equivariance() {
        let f = sample_map().then(&AreaPreservingMap::single(Generator::Linear([[2, 1], [1, 1]])));
        assert_eq!(f.linear_part(), [[2, 1], [1, 1]]);
        let mut rng = stream_rng(7, 1);
        for _ in 0..500 {
            let x = [rng.gen::<f64>(), rng.gen::<f64>()];
            let j = f.jacobian(x);
            assert!((j[0][0] * j[1][1] - j[0][1] * j[1][0] - 1.0).abs() < 1e-12);
            assert!((finite_difference_det(&f, x, 1e-6) - 1.0).abs() < 1e-6);
            for z in [[1.0, 0.0], [-1.0, 1.0], [0.0, -1.0]] {
                let a = f.eval_f64([x[0] + z[0], x[1] + z[1]]);
                let b = f.eval_f64(x);
                let m = f.linear_part();
                let mz = [m[0][0] as f64 * z[0] + m[0][1] as f64 * z[1], m[1][0] as f64 * z[0] + m[1][1] as f64 * z[1]];
                assert!((a[0] - b[0] - mz[0]).abs() < 1e-10 && (a[1] - b[1] - mz[1]).abs() < 1e-10);
            }
        }
        let l = AreaPreservingMap::single(Generator::Linear([[1, 1], [0, 1]]));
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((l.c1_norm_estimate(&GridSpec::new(4)) - golden).abs() < 1e-12);
        assert!(l.c0_distance_to_identity(&GridSpec::new(4)).is_err());
    }

    #[test]
    fn iterate_and_conjugate() {
        let t = AreaPreservingMap::translation_f64(0.25, 0.0);
        assert_eq!(t.iterate([0.0, 0.0], 4)[4], [1.0, 0.0]);
        assert_eq!(t.iterate([0.3, 0.1], 0), vec![[0.3, 0.1]]);
        let h = sample_map();
        let f = AreaPreservingMap::translation_f64(0.1234, 0.5678).conjugate(&h);
        let hinv = h.inverse();
        let x = [0.37, 0.81];
        let orbit = f.iterate(x, 100);
        for (k, p) in orbit.iter().enumerate() {
            let y = hinv.eval_f64(x);
            let q = h.eval_f64([y[0] + k as f64 * 0.1234, y[1] + k as f64 * 0.5678]);
            assert!((q[0] - p[0]).abs() < 1e-10 && (q[1] - p[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn commutes_with_period_translations() {
        let p = PeriodicProfile::from_f64(5, &[(0.03, 0.05, 0.2)]).unwrap();
        let f = AreaPreservingMap::new(vec![Generator::ShearX(p.clone()), Generator::ShearY(p)]);
        let mut rng = stream_rng(3, 0);
        for _ in 0..200 {
            let x = [rng.gen::<f64>(), rng.gen::<f64>()];
            for s in [[0.2, 0.0], [0.0, 0.2]] {
                let a = f.eval_f64([x[0] + s[0], x[1] + s[1]]);
                let b = f.eval_f64(x);
                assert!((a[0] - b[0] - s[0]).abs() < 1e-12 && (a[1] - b[1] - s[1]).abs() < 1e-12);
            }
        }
    }
}
