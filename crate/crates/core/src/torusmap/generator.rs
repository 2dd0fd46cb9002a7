//! Elementary area-preserving maps of the plane that descend to the torus.

use num_rational::BigRational;

use super::PeriodicProfile;
use crate::real::{Exact, Real};

pub type Matrix = [[i64; 2]; 2];

pub const IDENTITY: Matrix = [[1, 0], [0, 1]];

pub fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

/// Inverse of a determinant-one matrix.
pub fn mat_inv(a: &Matrix) -> Matrix {
    [[a[1][1], -a[0][1]], [-a[1][0], a[0][0]]]
}

/// Largest singular value of a real 2×2 matrix.
pub fn operator_norm(m: [[f64; 2]; 2]) -> f64 {
    let [[a, b], [c, d]] = m;
    let s = a * a + b * b + c * c + d * d;
    let det = a * d - b * c;
    let disc = (s * s - 4.0 * det * det).max(0.0).sqrt();
    ((s + disc) / 2.0).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub enum Generator {
    Translation([Exact; 2]),
    /// `(w₁, w₂) ↦ (w₁ + φ(w₂), w₂)`
    ShearX(PeriodicProfile),
    /// `(w₁, w₂) ↦ (w₁, w₂ + φ(w₁))`
    ShearY(PeriodicProfile),
    Linear(Matrix),
}

impl Generator {
    pub fn translation(v: [BigRational; 2]) -> Self {
        let [a, b] = v;
        Generator::Translation([Exact::new(a), Exact::new(b)])
    }

    pub fn translation_f64(x: f64, y: f64) -> Self {
        Self::translation([
            BigRational::from_float(x).expect("finite"),
            BigRational::from_float(y).expect("finite"),
        ])
    }

    pub fn apply<R: Real>(&self, p: [R; 2]) -> [R; 2] {
        let [x, y] = p;
        match self {
            Generator::Translation(v) => [x + v[0].get::<R>(), y + v[1].get::<R>()],
            Generator::ShearX(phi) => {
                let s = phi.eval(&y);
                [x + s, y]
            }
            Generator::ShearY(phi) => {
                let s = phi.eval(&x);
                [x, y + s]
            }
            Generator::Linear(m) => {
                let e = |k: i64| R::from_f64(k as f64);
                [
                    e(m[0][0]) * x.clone() + e(m[0][1]) * y.clone(),
                    e(m[1][0]) * x + e(m[1][1]) * y,
                ]
            }
        }
    }

    pub fn jacobian<R: Real>(&self, p: &[R; 2]) -> [[R; 2]; 2] {
        let (o, z) = (R::one(), R::zero());
        match self {
            Generator::Translation(_) => [[o.clone(), z.clone()], [z, o]],
            Generator::ShearX(phi) => [[o.clone(), phi.derivative(&p[1])], [z, o]],
            Generator::ShearY(phi) => [[o.clone(), z], [phi.derivative(&p[0]), o]],
            Generator::Linear(m) => {
                let e = |k: i64| R::from_f64(k as f64);
                [[e(m[0][0]), e(m[0][1])], [e(m[1][0]), e(m[1][1])]]
            }
        }
    }

    pub fn inverse(&self) -> Generator {
        match self {
            Generator::Translation(v) => Generator::Translation([
                Exact::new(-v[0].value().clone()),
                Exact::new(-v[1].value().clone()),
            ]),
            Generator::ShearX(phi) => Generator::ShearX(phi.negated()),
            Generator::ShearY(phi) => Generator::ShearY(phi.negated()),
            Generator::Linear(m) => Generator::Linear(mat_inv(m)),
        }
    }

    pub fn linear_part(&self) -> Matrix {
        match self {
            Generator::Linear(m) => *m,
            _ => IDENTITY,
        }
    }

    /// Certified Lipschitz constant.
    pub fn lipschitz_bound(&self) -> f64 {
        match self {
            Generator::Translation(_) => 1.0,
            Generator::ShearX(phi) | Generator::ShearY(phi) => {
                let s = phi.derivative_bound();
                operator_norm([[1.0, s], [0.0, 1.0]]) * (1.0 + 1e-12)
            }
            Generator::Linear(m) => {
                let f = |k: i64| k as f64;
                operator_norm([[f(m[0][0]), f(m[0][1])], [f(m[1][0]), f(m[1][1])]]) * (1.0 + 1e-12)
            }
        }
    }

    /// Certified `sup ‖g(x) − x‖` on the lift, `None` for linear maps.
    pub fn displacement_bound(&self) -> Option<f64> {
        match self {
            Generator::Translation(v) => Some(v[0].approx().hypot(v[1].approx()) * (1.0 + 1e-15)),
            Generator::ShearX(phi) | Generator::ShearY(phi) => Some(phi.sup_norm()),
            Generator::Linear(m) if *m == IDENTITY => Some(0.0),
            Generator::Linear(_) => None,
        }
    }
}
