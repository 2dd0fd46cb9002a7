//! Integer lattices in the plane: Hermite normal form, Gauss reduction,
//! covering radius and nearest points.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::real::ratio_to_f64;

pub type IVec = [BigInt; 2];

fn dot(a: &IVec, b: &IVec) -> BigInt {
    &a[0] * &b[0] + &a[1] * &b[1]
}

fn sub_mul(a: &IVec, k: &BigInt, b: &IVec) -> IVec {
    [&a[0] - k * &b[0], &a[1] - k * &b[1]]
}

/// Nearest integer, ties away from zero.
pub fn round_ratio(r: &BigRational) -> BigInt {
    r.round().to_integer()
}

/// Basis `[(a, b), (0, d)]` with `0 ≤ b < d` of the lattice spanned by `gens`.
pub fn hermite_basis(gens: &[IVec]) -> Option<[IVec; 2]> {
    let mut with_x: Option<IVec> = None;
    let mut d = BigInt::zero();
    for g in gens {
        let g = g.clone();
        match with_x.take() {
            None if g[0].is_zero() => d = d.gcd(&g[1]),
            None => with_x = Some(g),
            Some(u) if g[0].is_zero() => {
                d = d.gcd(&g[1]);
                with_x = Some(u);
            }
            Some(u) => {
                let e = u[0].extended_gcd(&g[0]);
                let top = [&e.x * &u[0] + &e.y * &g[0], &e.x * &u[1] + &e.y * &g[1]];
                let (su, sg) = (&g[0] / &e.gcd, &u[0] / &e.gcd);
                // (g₀/gcd)·u − (u₀/gcd)·g has first coordinate zero
                let low = &su * &u[1] - &sg * &g[1];
                d = d.gcd(&low);
                with_x = Some(top);
            }
        }
    }
    let mut top = with_x?;
    if d.is_zero() {
        return None;
    }
    if top[0].is_negative() {
        top = [-&top[0], -&top[1]];
    }
    top[1] = top[1].mod_floor(&d);
    Some([top, [BigInt::zero(), d]])
}

/// Lagrange–Gauss reduction: `|b₁| ≤ |b₂|` and `2|b₁·b₂| ≤ |b₁|²`.
pub fn gauss_reduce(basis: [IVec; 2]) -> [IVec; 2] {
    let [mut a, mut b] = basis;
    if dot(&a, &a) > dot(&b, &b) {
        std::mem::swap(&mut a, &mut b);
    }
    loop {
        let mu = round_ratio(&BigRational::new(dot(&a, &b), dot(&a, &a)));
        b = sub_mul(&b, &mu, &a);
        if dot(&b, &b) >= dot(&a, &a) {
            return [a, b];
        }
        std::mem::swap(&mut a, &mut b);
    }
}

/// Covering radius of `basis / scale`, via the circumradius of the
/// non-obtuse triangle spanned by a reduced basis.
pub fn covering_radius(basis: &[IVec; 2], scale: &BigInt) -> f64 {
    let [a, b] = gauss_reduce(basis.clone());
    let b = if dot(&a, &b).is_negative() { [-&b[0], -&b[1]] } else { b };
    let c = [&b[0] - &a[0], &b[1] - &a[1]];
    let s2 = BigRational::from_integer(scale * scale);
    let len = |v: &IVec| ratio_to_f64(&(BigRational::from_integer(dot(v, v)) / &s2)).sqrt();
    let det = (&a[0] * &b[1] - &a[1] * &b[0]).abs();
    let area = ratio_to_f64(&(BigRational::from_integer(det) / &s2));
    len(&a) * len(&b) * len(&c) / (2.0 * area)
}

/// The lattice point nearest to `target` among the Babai point of a reduced
/// basis and its eight neighbours, with exact squared distance.
pub fn nearest_point(basis: &[IVec; 2], target: &[BigRational; 2]) -> (IVec, BigRational) {
    let [a, b] = gauss_reduce(basis.clone());
    let det = BigRational::from_integer(&a[0] * &b[1] - &a[1] * &b[0]);
    // target = s·a + t·b by Cramer's rule
    let ar = [BigRational::from_integer(a[0].clone()), BigRational::from_integer(a[1].clone())];
    let br = [BigRational::from_integer(b[0].clone()), BigRational::from_integer(b[1].clone())];
    let s = (&target[0] * &br[1] - &target[1] * &br[0]) / &det;
    let t = (&ar[0] * &target[1] - &ar[1] * &target[0]) / &det;
    let (s0, t0) = (round_ratio(&s), round_ratio(&t));
    let mut best: Option<(IVec, BigRational)> = None;
    for i in -1..=1 {
        for j in -1..=1 {
            let (si, tj) = (&s0 + BigInt::from(i), &t0 + BigInt::from(j));
            let p = [&si * &a[0] + &tj * &b[0], &si * &a[1] + &tj * &b[1]];
            let dx = BigRational::from_integer(p[0].clone()) - &target[0];
            let dy = BigRational::from_integer(p[1].clone()) - &target[1];
            let d2 = &dx * &dx + &dy * &dy;
            if best.as_ref().map_or(true, |(_, bd)| d2 < *bd) {
                best = Some((p, d2));
            }
        }
    }
    best.expect("nine candidates")
}

/// Lattice `{k·ŵ + qℤ²}` of the orbit of `ŵ/q`, scaled by `q`.
pub fn orbit_lattice(omega_hat: &IVec, q: &BigInt) -> [IVec; 2] {
    hermite_basis(&[
        omega_hat.clone(),
        [q.clone(), BigInt::zero()],
        [BigInt::zero(), q.clone()],
    ])
    .expect("full rank")
}
