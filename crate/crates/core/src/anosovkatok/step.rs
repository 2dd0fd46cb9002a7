//! The one-step conjugacy `h = T_x Φ₁ Φ₂ g T_{−x}`: commutes with the
//! `1/q`-translations, pulls a pair of nearby points back to `(x, y)`, and
//! nearly fixes their `1/(2q)`-shifted probes.
//!
//! Conjugating a shear by `T_x` only moves its profile, so every factor is
//! stored as a shear with shifted bump centers and `h` carries no large
//! translations.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use super::{dist_to_grid, hp, min_rep, torus_dist, ConstructionError};
use crate::real::ratio_to_f64;
use crate::torusmap::{AreaPreservingMap, Generator, PeriodicProfile};

/// Fixed irrational-looking direction of `y' − x'`.
const DIRECTION: [(i64, i64); 2] = [(6_180_339_887, 10_000_000_000), (4_142_135_623, 10_000_000_000)];

#[derive(Clone, Debug)]
pub struct BuiltH {
    pub h: AreaPreservingMap,
    pub x_prime: [BigRational; 2],
    pub y_prime: [BigRational; 2],
    pub k: BigInt,
    pub m: BigInt,
    pub report: BuildReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct BuildReport {
    pub sigma: f64,
    /// `|k|/q + Σ max|φ|` over the shear factors.
    pub certified_c0: f64,
    /// `3d(x, y) + 2/q`
    pub c0_bound: f64,
    pub marker_distance: f64,
    /// Distance of the coordinates of `y' − x'` to `(1/q)ℤ`.
    pub tau_prime: f64,
    /// `max_z d(h(z'), z)` for `z = x, y`.
    pub marker_error: f64,
    /// `d(h T_{(1/2q,0)}(x'), h T_{(1/2q,0)}(y'))`
    pub probe_distance: f64,
}

fn trunc(r: &BigRational) -> BigInt {
    r.trunc().to_integer()
}

fn shear(q: &BigInt, center: BigRational, half_width: BigRational, amplitude: BigRational) -> Result<PeriodicProfile, ConstructionError> {
    PeriodicProfile::new(q.clone(), vec![(center, half_width, amplitude)])
        .map_err(|e| ConstructionError::BumpPlacement(e.to_string()))
}

/// Builds `h` for the pair `(x, y)` at scale `1/q`.
pub fn build_h(
    q: &BigInt,
    x: &[BigRational; 2],
    y: &[BigRational; 2],
    sigma: f64,
    tau: f64,
) -> Result<BuiltH, ConstructionError> {
    if q < &BigInt::from(2) {
        return Err(ConstructionError::InvalidArgument("q must be at least 2".into()));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(ConstructionError::InvalidArgument("sigma must be positive".into()));
    }
    if !(tau > 0.0) {
        return Err(ConstructionError::Transversality { measured: 0.0, tau });
    }
    let delta = [min_rep(&(&y[0] - &x[0])), min_rep(&(&y[1] - &x[1]))];
    let d = ratio_to_f64(&delta[0]).hypot(ratio_to_f64(&delta[1]));
    if d >= 0.5 {
        return Err(ConstructionError::InvalidArgument(format!("d(x, y) = {d} is not below 1/2")));
    }
    let dist = [dist_to_grid(&delta[0], q), dist_to_grid(&delta[1], q)];
    let measured = ratio_to_f64(&dist[0]).min(ratio_to_f64(&dist[1]));
    if measured < tau {
        return Err(ConstructionError::Transversality { measured, tau });
    }
    let qr = BigRational::from_integer(q.clone());
    let inv_q = qr.recip();
    let half = BigRational::new(1.into(), 2.into());

    // sign-aware cell: T_{(0,k/q)} and φ₁ move y into (−1/q, 1/q)² keeping the sign of δ
    let k = -trunc(&(&delta[1] * &qr));
    let m = trunc(&(&delta[0] * &qr));
    let kq = BigRational::new(k.clone(), q.clone());
    let mq = BigRational::new(m.clone(), q.clone());
    let r = [&delta[0] - &mq, &delta[1] + &kq];

    let sigma_r = BigRational::from_float(sigma).expect("finite");
    let rho = [
        sigma_r,
        BigRational::new(4.into(), 100.into()) * &inv_q,
        BigRational::new(1.into(), 10.into()) * &dist[1],
    ]
    .into_iter()
    .min()
    .expect("nonempty")
        * &half;
    let yp = [
        &rho * BigRational::new(DIRECTION[0].0.into(), DIRECTION[0].1.into()),
        &rho * BigRational::new(DIRECTION[1].0.into(), DIRECTION[1].1.into()),
    ];

    let mut gens = Vec::new();
    // g: a vertical then a horizontal shear, both vanishing on the probes
    gens.push(Generator::ShearY(shear(
        q,
        &x[0] + &yp[0],
        &yp[0] * BigRational::new(9.into(), 10.into()),
        &r[1] - &yp[1],
    )?));
    gens.push(Generator::ShearX(shear(q, &x[1] + &r[1], &dist[1] * &half, &r[0] - &yp[0])?));
    if !k.is_zero() {
        gens.push(Generator::ShearY(shear(q, x[0].clone(), &dist[0] * &half, kq.clone())?));
    }
    if !m.is_zero() {
        gens.push(Generator::ShearX(shear(q, &x[1] + &delta[1], &dist[1] * &half, mq.clone())?));
    }
    if !k.is_zero() {
        gens.push(Generator::translation([BigRational::zero(), -kq.clone()]));
    }
    let h = AreaPreservingMap::new(gens);

    let certified_c0 = 2.0 * ratio_to_f64(&kq.abs()) + ratio_to_f64(&mq.abs())
        + ratio_to_f64(&(&r[1] - &yp[1]).abs())
        + ratio_to_f64(&(&r[0] - &yp[0]).abs());
    let c0_bound = 3.0 * d + 2.0 / q.to_f64().unwrap_or(f64::INFINITY);

    let x_prime = x.clone();
    let y_prime = [&x[0] + &yp[0], &x[1] + &yp[1]];
    let marker_error = torus_dist(&h.eval(hp(&x_prime)), &hp(x)).max(torus_dist(&h.eval(hp(&y_prime)), &hp(y)));
    let shift = [&inv_q * &half, BigRational::zero()];
    let probe = |z: &[BigRational; 2]| h.eval(hp(&[&z[0] + &shift[0], &z[1] + &shift[1]]));
    let probe_distance = torus_dist(&probe(&x_prime), &probe(&y_prime));
    let tau_prime = ratio_to_f64(&dist_to_grid(&yp[0], q)).min(ratio_to_f64(&dist_to_grid(&yp[1], q)));
    let marker_distance = ratio_to_f64(&yp[0]).hypot(ratio_to_f64(&yp[1]));
    Ok(BuiltH {
        h,
        x_prime,
        y_prime,
        k,
        m,
        report: BuildReport {
            sigma,
            certified_c0,
            c0_bound,
            marker_distance,
            tau_prime,
            marker_error,
            probe_distance,
        },
    })
}
