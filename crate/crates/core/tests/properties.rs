use num_rational::BigRational;
use proptest::prelude::*;

use pseudorot::diophantine::{continued_fraction, sl2z_complete, torus_norm, Frequency, QuadraticValue};
use pseudorot::torusmap::{map_from_value, map_to_value};
use pseudorot::{AreaPreservingMap, Generator, PeriodicProfile};

fn shear() -> impl Strategy<Value = Generator> {
    (1u64..4, 0.0..1.0f64, 0.1..0.45f64, -0.2..0.2f64, any::<bool>()).prop_map(|(q, c, w, a, horizontal)| {
        let p = 1.0 / q as f64;
        let prof = PeriodicProfile::from_f64(q, &[(c * p, w * p, a * w * p)]).unwrap();
        if horizontal {
            Generator::ShearX(prof)
        } else {
            Generator::ShearY(prof)
        }
    })
}

fn generator() -> impl Strategy<Value = Generator> {
    prop_oneof![
        (-40i64..40, 1i64..50, -40i64..40, 1i64..50).prop_map(|(a, b, c, d)| Generator::translation([
            BigRational::new(a.into(), b.into()),
            BigRational::new(c.into(), d.into()),
        ])),
        shear(),
    ]
}

fn map() -> impl Strategy<Value = AreaPreservingMap> {
    prop::collection::vec(generator(), 0..6).prop_map(AreaPreservingMap::new)
}

proptest! {
    #[test]
    fn inverse_undoes_map(f in map(), x in 0.0..1.0f64, y in 0.0..1.0f64) {
        let back = f.inverse().eval_f64(f.eval_f64([x, y]));
        prop_assert!((back[0] - x).hypot(back[1] - y) < 1e-12);
    }

    #[test]
    fn conjugate_matches_composition(f in map(), h in map(), x in 0.0..1.0f64, y in 0.0..1.0f64) {
        let a = f.conjugate(&h).eval_f64([x, y]);
        let b = h.eval_f64(f.eval_f64(h.inverse().eval_f64([x, y])));
        prop_assert!((a[0] - b[0]).hypot(a[1] - b[1]) < 1e-12);
    }

    #[test]
    fn displacement_bound_is_respected(f in map(), x in 0.0..1.0f64, y in 0.0..1.0f64) {
        let p = f.eval_f64([x, y]);
        let bound = f.displacement_bound().unwrap();
        prop_assert!((p[0] - x).hypot(p[1] - y) <= bound + 1e-12);
    }

    #[test]
    fn json_roundtrip_is_exact(f in map(), x in -2.0..2.0f64, y in -2.0..2.0f64) {
        let back = map_from_value(map_to_value(&f)).unwrap();
        prop_assert_eq!(back.eval_f64([x, y]), f.eval_f64([x, y]));
    }

    #[test]
    fn completion_is_unimodular(c in -500i64..500, d in -500i64..500) {
        let g = num_integer::Integer::gcd(&c, &d);
        match sl2z_complete(c, d) {
            Ok(m) => {
                prop_assert_eq!(g, 1);
                prop_assert_eq!(m[0][0] * m[1][1] - m[0][1] * m[1][0], 1);
                prop_assert_eq!(m[1], [c, d]);
            }
            Err(_) => prop_assert_ne!(g, 1),
        }
    }

    #[test]
    fn rational_expansion_ends_at_its_denominator(p in -2000i64..2000, q in 1i64..2000) {
        let seq = continued_fraction(&Frequency::ratio(p, q), 64).unwrap();
        let r = BigRational::new(p.into(), q.into());
        let last = seq.all_denominators().last().cloned().unwrap();
        prop_assert_eq!(&last, r.denom());
        prop_assert!(seq.all_denominators().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn quadratic_torus_norm_agrees_with_float(a in -50i64..50, b in 1i64..20, k in 2u64..30) {
        prop_assume!(((k as f64).sqrt().round() as u64).pow(2) != k);
        let x = QuadraticValue::new(BigRational::new(a.into(), 7.into()), BigRational::new(b.into(), 3.into()), k);
        let exact = x.torus_norm();
        prop_assert!(!exact.signum().is_lt());
        prop_assert!((exact.to_f64() - torus_norm(x.to_f64())).abs() < 1e-12);
        let floor = x.floor();
        let frac = x.add_rational(&-BigRational::from_integer(floor));
        prop_assert!(!frac.signum().is_lt() && frac.to_f64() < 1.0);
    }
}
