//! Acceptance suite: one verdict line per criterion, nonzero exit on failure.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::Rng;

use pseudorot::anosovkatok::{conjugated_power, counterexample, ConstructionParams, ConstructionReport, StageState};
use pseudorot::centralizer::{commutator_defect, verify_homomorphism, verify_uniform_bound};
use pseudorot::diophantine::{
    build_liouville_vector, continued_fraction, torus_norm, torus_norm2_f64, Frequency, Growth, QuadraticValue,
};
use pseudorot::displacement::{
    c0_bound_check, c_constant, first_return_stats, random_disc, verify_disc_displacement, FundamentalDomain,
    SimpleDisc, Verdict,
};
use pseudorot::real::ratio_to_f64;
use pseudorot::rotation::{deviation_series, deviation_series_from, estimate_rotation_vector, rigidity_search};
use pseudorot::sampling::{r2_points, stream_rng};
use pseudorot::torusmap::{finite_difference_det, read_map, write_map};
use pseudorot::{AreaPreservingMap, Generator, GridSpec, PeriodicProfile};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn golden() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

fn shear_x(q: u64, c: f64, w: f64, a: f64) -> AreaPreservingMap {
    AreaPreservingMap::single(Generator::ShearX(PeriodicProfile::from_f64(q, &[(c, w, a)]).unwrap()))
}

fn shear_y(q: u64, c: f64, w: f64, a: f64) -> AreaPreservingMap {
    AreaPreservingMap::single(Generator::ShearY(PeriodicProfile::from_f64(q, &[(c, w, a)]).unwrap()))
}

/// A shear pair `S_y ∘ S_x` with amplitude `a`.
fn shear_pair(a: f64) -> AreaPreservingMap {
    shear_x(1, 0.3, 0.25, a).then(&shear_y(2, 0.1, 0.2, -0.7 * a))
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

struct Stages {
    runs: Vec<(AreaPreservingMap, StageState, ConstructionReport, Duration)>,
}

impl Stages {
    fn build() -> Stages {
        let params = ConstructionParams::default();
        let runs = (1..=3)
            .map(|n| {
                let t = Instant::now();
                let (f, s, r) = counterexample(n, &params).expect("construction runs");
                (f, s, r, t.elapsed())
            })
            .collect();
        Stages { runs }
    }

    fn stage2(&self) -> &StageState {
        &self.runs[1].1
    }
}

/// Power `f₂^m` with its exact rotation vector.
fn stage2_power(s: &StageState, m: u64) -> (AreaPreservingMap, [f64; 2]) {
    let (map, v) = conjugated_power(&s.conjugacy(), &s.omega, &BigInt::from(m));
    (map, [ratio_to_f64(&v[0]), ratio_to_f64(&v[1])])
}

fn random_generator<G: Rng>(rng: &mut G) -> Generator {
    match rng.gen_range(0..4) {
        0 => Generator::translation([
            BigRational::new(rng.gen_range(-50..50).into(), rng.gen_range(1..60).into()),
            BigRational::new(rng.gen_range(-50..50).into(), rng.gen_range(1..60).into()),
        ]),
        k @ (1 | 2) => {
            let q = rng.gen_range(1..4u64);
            let p = 1.0 / q as f64;
            let w = rng.gen_range(0.15..0.45) * p;
            let prof = PeriodicProfile::from_f64(q, &[(rng.gen_range(0.0..p), w, rng.gen_range(-0.3..0.3) * w)]).unwrap();
            if k == 1 {
                Generator::ShearX(prof)
            } else {
                Generator::ShearY(prof)
            }
        }
        _ => {
            const MATS: [[[i64; 2]; 2]; 4] = [[[1, 1], [0, 1]], [[1, 0], [-1, 1]], [[0, -1], [1, 0]], [[2, 1], [1, 1]]];
            Generator::Linear(MATS[rng.gen_range(0..4)])
        }
    }
}

fn generator_soundness() -> Outcome {
    let t = Instant::now();
    let (mut det_err, mut equi_err, mut inv_err) = (0.0f64, 0.0f64, 0.0f64);
    let mut points = 0;
    for c in 0..24u64 {
        let mut rng = stream_rng(101, c);
        let len = rng.gen_range(2..7);
        let f = AreaPreservingMap::new((0..len).map(|_| random_generator(&mut rng)).collect());
        let finv = f.inverse();
        let m = f.linear_part();
        for _ in 0..500 {
            let p = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            let k = [rng.gen_range(-3..=3i64), rng.gen_range(-3..=3i64)];
            det_err = det_err.max((finite_difference_det(&f, p, 1e-6) - 1.0).abs());
            let a = f.eval_f64(p);
            let b = f.eval_f64([p[0] + k[0] as f64, p[1] + k[1] as f64]);
            let mk = [(m[0][0] * k[0] + m[0][1] * k[1]) as f64, (m[1][0] * k[0] + m[1][1] * k[1]) as f64];
            equi_err = equi_err.max(dist([b[0] - mk[0], b[1] - mk[1]], a));
            inv_err = inv_err.max(dist(finv.eval_f64(a), p));
            points += 1;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        points >= 10_000 && det_err <= 1e-6 && equi_err <= 1e-10 && inv_err <= 1e-12 && secs < 10.0,
        format!(
            "{points} points on 24 compositions: |det-1| {det_err:.1e}, equivariance {equi_err:.1e}, inverse {inv_err:.1e}, {secs:.1}s"
        ),
    )
}

fn surd(k: u64) -> Frequency {
    let a = -((k as f64).sqrt().floor());
    Frequency::exact(QuadraticValue::new(
        BigRational::from_float(a).unwrap(),
        BigRational::one(),
        k,
    ))
}

/// `‖qα‖` compared exactly when the float values are too close to call.
fn norm_cmp(alpha: &QuadraticValue, a: u64, b: u64) -> std::cmp::Ordering {
    let x = alpha.to_f64();
    let (na, nb) = (torus_norm(a as f64 * x), torus_norm(b as f64 * x));
    if (na - nb).abs() > 1e-9 {
        return na.total_cmp(&nb);
    }
    let exact = |q: u64| alpha.scale(&BigRational::from_integer(q.into())).torus_norm();
    exact(a).cmp_value(&exact(b)).expect("same field")
}

fn continued_fraction_oracle() -> Outcome {
    let t = Instant::now();
    let mut freqs = vec![Frequency::golden()];
    freqs.extend([2, 3, 5, 6, 7, 10, 11, 13].map(surd));
    freqs.extend([(355, 113), (103993, 33102), (13, 21), (1, 7), (99989, 100000), (5, 12)].map(|(p, q)| Frequency::ratio(p, q)));
    for (g, q1, stages) in [(Growth::PlusOne, 2, 4), (Growth::SelfPow, 2, 2), (Growth::Pow2, 3, 2)] {
        let v = build_liouville_vector(g, q1, stages, 4096).unwrap().vector();
        freqs.extend(v.components);
    }
    freqs.truncate(20);
    let (mut terms, mut failures) = (0, Vec::new());
    for (i, f) in freqs.iter().enumerate() {
        let alpha = match (f.exact_form(), f.as_rational()) {
            (Some(q), _) => q.clone(),
            (None, Some(r)) => QuadraticValue::rational(r.clone()),
            _ => unreachable!("all oracle inputs are exact"),
        };
        let seq = continued_fraction(f, 40).unwrap();
        let qs: Vec<u64> = seq.all_denominators().iter().map_while(|q| q.to_u64()).collect();
        let rational_end = f.as_rational().map(|r| r.denom().to_u64());
        for w in qs.windows(2) {
            let (qn, qn1) = (w[0], w[1]);
            if qn1 > 100_000 {
                break;
            }
            terms += 1;
            let p1 = qn < qn1;
            let p2 = (1..qn1).all(|q| norm_cmp(&alpha, qn, q) != std::cmp::Ordering::Greater);
            let exact_qn = alpha.scale(&BigRational::from_integer(qn.into())).torus_norm();
            let bound = QuadraticValue::rational(BigRational::new(1.into(), qn1.into()));
            let ord = exact_qn.cmp_value(&bound).unwrap();
            // a rational α meets the bound with equality at its last denominator
            let p3 = ord.is_lt() || (ord.is_eq() && rational_end == Some(Some(qn1)));
            if !(p1 && p2 && p3) {
                failures.push(format!("#{i} q_n={qn}"));
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        failures.is_empty() && freqs.len() == 20 && secs < 60.0,
        format!("{} frequencies, {terms} terms scanned, failures {failures:?}, {secs:.1}s", freqs.len()),
    )
}

fn rotation_identities() -> Outcome {
    let h = shear_pair(5e-4);
    let omega = [golden(), 2f64.sqrt() - 1.0];
    let f = AreaPreservingMap::translation_f64(omega[0], omega[1]).conjugate(&h);
    let (samples, iters) = (16, 40_000);
    let base = estimate_rotation_vector(&f, samples, iters).unwrap();
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for q in 1..=8 {
        let e = estimate_rotation_vector(&f.power(q), samples, iters).unwrap();
        let gap = dist(e.vector, [q as f64 * base.vector[0], q as f64 * base.vector[1]]);
        let combined = e.residual + q as f64 * base.residual;
        ok &= gap <= combined && combined <= 1e-6;
        worst = worst.max(gap);
    }
    for a in [[[1i64, 1], [0, 1]], [[2, 1], [1, 1]]] {
        let ta = AreaPreservingMap::single(Generator::Linear(a));
        let e = estimate_rotation_vector(&f.conjugate(&ta), samples, iters).unwrap();
        let av = [
            a[0][0] as f64 * base.vector[0] + a[0][1] as f64 * base.vector[1],
            a[1][0] as f64 * base.vector[0] + a[1][1] as f64 * base.vector[1],
        ];
        let norm_a = (a[0][0].pow(2) + a[0][1].pow(2) + a[1][0].pow(2) + a[1][1].pow(2)) as f64;
        let combined = e.residual + norm_a.sqrt() * base.residual;
        let gap = dist(e.vector, av);
        ok &= gap <= combined && combined <= 1e-6;
        worst = worst.max(gap);
    }
    let truth = dist(base.vector, omega);
    outcome(
        ok && truth <= base.residual,
        format!("worst gap {worst:.1e} over q <= 8 and two matrices, |rho - omega| {truth:.1e} (residual {:.1e})", base.residual),
    )
}

fn bmm_bound(stages: &Stages) -> Outcome {
    let pts = GridSpec::new(64).points();
    let mut ok = true;
    let mut detail = Vec::new();
    for (a, omega) in [(0.05, [golden(), golden() * golden()]), (0.12, [0.3, 0.7]), (0.02, [2f64.sqrt() - 1.0, 1e-3])] {
        let h = shear_pair(a);
        let f = AreaPreservingMap::translation_f64(omega[0], omega[1]).conjugate(&h);
        let exact = f.generators().iter().find_map(|g| match g {
            Generator::Translation(v) => Some([v[0].approx(), v[1].approx()]),
            _ => None,
        });
        let kappa = deviation_series_from(&f, exact.unwrap(), &pts, 10_000, None).kappa();
        let bound = 2.0 * h.displacement_bound().unwrap();
        ok &= kappa <= bound + 1e-6;
        detail.push(format!("{kappa:.3e}<={bound:.3e}"));
    }
    for (_, s, r, _) in &stages.runs {
        ok &= r.kappa_hat < 10.0;
        detail.push(format!("stage {} {:.1e}<10", s.n, r.kappa_hat));
    }
    outcome(ok, format!("kappa_hat {}", detail.join(", ")))
}

/// Disc areas above `threshold`, below a per-shape cap.
fn campaign_discs(seed: u64, stream0: u64, count: usize, threshold: f64) -> Vec<SimpleDisc> {
    const CAPS: [f64; 3] = [0.3, 0.3, 0.1];
    let dom = FundamentalDomain::Centered([0.5, 0.5]);
    (0..count)
        .map(|i| {
            let kind = i % 3;
            let min = (1.01 * threshold).max(0.01 * CAPS[kind]);
            assert!(min < CAPS[kind], "threshold {threshold} too large");
            random_disc(&mut stream_rng(seed, stream0 + i as u64), kind, &dom, min, CAPS[kind])
        })
        .collect()
}

fn displacement_campaign(stages: &Stages) -> (Outcome, Vec<String>) {
    let t = Instant::now();
    let dom = FundamentalDomain::Centered([0.5, 0.5]);
    let mut cases: Vec<(AreaPreservingMap, [f64; 2], usize)> = [[8e-4, 5e-4], [3e-4, -9e-4], [4e-4, 4e-4], [-9e-4, 1e-4]]
        .into_iter()
        .map(|w| (AreaPreservingMap::translation_f64(w[0], w[1]), w, 30))
        .collect();
    let s2 = stages.stage2();
    for j in 1..=12 {
        let (map, w) = stage2_power(s2, 100 * j);
        cases.push((map, w, 9));
    }

    let (mut total, mut hits, mut disjoint, mut alarms, mut shapes) = (0, 0, 0, 0, [0usize; 3]);
    let mut lines = Vec::new();
    for (c, (map, w, count)) in cases.iter().enumerate() {
        let kappa = deviation_series(map, *w, 32, 500, None).kappa();
        let norm = torus_norm2_f64(*w);
        let threshold = c_constant(kappa, &dom).unwrap() * norm;
        for (i, disc) in campaign_discs(7, 1000 * c as u64, *count, threshold).iter().enumerate() {
            let r = verify_disc_displacement(map, kappa, norm, &dom, disc, 1024, 7, (1000 * c + i) as u64).unwrap();
            total += 1;
            shapes[i % 3] += 1;
            match r.verdict {
                Verdict::Intersects => hits += 1,
                Verdict::DisjointWithMargin => disjoint += 1,
                Verdict::Inconclusive => {}
            }
            alarms += usize::from(r.alarm);
            lines.push(format!("{c},{i},{},{:e},{:e},{:?}", r.shape, r.area, r.threshold, r.verdict));
        }
    }
    let secs = t.elapsed().as_secs_f64();
    (
        outcome(
            total >= 200 && disjoint == 0 && alarms == 0 && shapes.iter().all(|n| *n > 0) && secs < 300.0,
            format!(
                "{total} pairs (round/rect/snake {shapes:?}): {hits} intersect, {disjoint} disjoint, {alarms} alarms, {secs:.1}s"
            ),
        ),
        lines,
    )
}

fn c0_small_rotation(stages: &Stages) -> Outcome {
    let grid = GridSpec::new(64);
    let mut ok = true;
    let mut detail = Vec::new();
    let mut check = |label: String, map: &AreaPreservingMap, w: [f64; 2]| {
        let kappa = deviation_series(map, w, 32, 500, None).kappa();
        let r = c0_bound_check(map, kappa, torus_norm2_f64(w), &grid).unwrap();
        ok &= r.hypothesis_holds && r.lhs <= r.rhs + 1e-6;
        detail.push(format!("{label} {:.1e}<={:.1e}", r.lhs, r.rhs));
    };
    for (k, norm) in [1e-4, 1e-6, 1e-8].into_iter().enumerate() {
        let th = 0.4 + k as f64;
        let w = [norm * th.cos(), norm * th.sin()];
        check(format!("T|{norm:e}|"), &AreaPreservingMap::translation_f64(w[0], w[1]), w);
    }
    for j in [1, 3, 10] {
        let (map, w) = stage2_power(stages.stage2(), 100 * j);
        check(format!("f2^{}", 100 * j), &map, w);
    }
    outcome(ok, detail.join(", "))
}

fn kac() -> Outcome {
    let dom = FundamentalDomain::Centered([0.5, 0.5]);
    let mut ok = true;
    let mut detail = Vec::new();
    let discs = [
        SimpleDisc::Round {
            center: [0.5, 0.5],
            radius: 0.1,
        },
        SimpleDisc::Rect {
            center: [0.4, 0.55],
            half_sides: [0.15, 0.05],
        },
    ];
    for (w, disc) in [[2f64.sqrt() - 1.0, 3f64.sqrt() - 1.0], [golden(), 5f64.sqrt() - 2.0]].iter().zip(&discs) {
        let f = AreaPreservingMap::translation_f64(w[0], w[1]);
        let s = first_return_stats(&f, &dom, disc, 100_000, 100_000, 16, 3).unwrap();
        ok &= s.kac_pass && s.lift_identity_error <= 1e-9 && s.samples >= 100_000;
        detail.push(format!(
            "{:.4}+-{:.1e} (lift {:.1e})",
            s.kac_estimate, s.kac_std_error, s.lift_identity_error
        ));
    }
    outcome(ok, format!("integral of n_D: {}", detail.join(", ")))
}

fn construction(stages: &Stages) -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for (_, s, r, dt) in &stages.runs {
        let conds: Vec<&str> = r.checks.iter().map(|c| c.condition).collect();
        let all = ["a1", "a2", "a3", "a4", "a5"].iter().all(|c| conds.contains(c));
        ok &= r.passed() && all && r.periodicity_error < 1e-9;
        detail.push(format!(
            "stage {}: {} checks, q {} bits, periodicity {:.1e}, {:.1}s",
            s.n,
            r.checks.len(),
            s.q().bits(),
            r.periodicity_error,
            dt.as_secs_f64()
        ));
    }
    ok &= stages.runs[2].3.as_secs() < 600;
    outcome(ok, detail.join("; "))
}

fn rigidity() -> Outcome {
    let g = golden();
    let omega = [g, g * g];
    let t = AreaPreservingMap::translation_f64(omega[0], omega[1]);
    let h = shear_x(1, 0.5, 0.3, 0.01);
    let conj = t.conjugate(&h);
    let oracle_norm = |n: usize| torus_norm2_f64([n as f64 * omega[0], n as f64 * omega[1]]);
    let oracle = (1..=1000).min_by(|a, b| oracle_norm(*a).total_cmp(&oracle_norm(*b))).unwrap();
    let fib = [1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233, 377, 610, 987];
    let grid = GridSpec::new(32);
    let bt = rigidity_search(&t, 1000, &grid)[0];
    let bc = rigidity_search(&conj, 1000, &grid)[0];
    let lip = h.lipschitz_bound();
    let ok = fib.contains(&oracle)
        && bt.n == oracle
        && bc.n == oracle
        && (bt.c0 - oracle_norm(oracle)).abs() <= 1e-9
        && bc.c0 <= lip * oracle_norm(oracle);
    outcome(
        ok,
        format!(
            "oracle n = {oracle}, translation n = {} ({:.3e}), conjugate n = {} ({:.3e} <= {:.3e})",
            bt.n,
            bt.c0,
            bc.n,
            bc.c0,
            lip * oracle_norm(oracle)
        ),
    )
}

fn centralizer() -> Outcome {
    let grid = GridSpec::new(16);
    let mut ok = true;
    let mut detail = Vec::new();
    let h = shear_pair(0.04);
    let conj = |a: f64, b: f64| AreaPreservingMap::translation_f64(a, b).conjugate(&h);
    let pairs = [
        (conj(golden(), 0.25), conj(0.125, 2f64.sqrt() - 1.0)),
        (conj(0.3, 0.7), conj(-0.1, 0.45)),
        (AreaPreservingMap::translation_f64(0.2, 0.1), AreaPreservingMap::translation_f64(1.0 / 3.0, 0.5)),
    ];
    for (f, g) in &pairs {
        let hom = verify_homomorphism(f, g, 32).unwrap();
        let w = f.generators().iter().find_map(|x| match x {
            Generator::Translation(v) => Some([v[0].approx(), v[1].approx()]),
            _ => None,
        });
        let kappa = deviation_series_from(f, w.unwrap(), &GridSpec::new(64).points(), 2000, None).kappa();
        let ub = verify_uniform_bound(f, kappa, g, 200, &grid, 1e-6).unwrap();
        ok &= hom.pass && ub.pass;
        detail.push(format!("phi1 {:.1e}/{:.1e}, spread {:.2e}<={:.2e}", hom.discrepancy, hom.allowed, ub.max_spread, ub.bound));
    }
    let non = [
        (AreaPreservingMap::translation_f64(0.3, 0.2), shear_x(1, 0.5, 0.3, 0.05)),
        (conj(0.3, 0.7), AreaPreservingMap::translation_f64(0.3, 0.7).conjugate(&shear_pair(-0.03))),
    ];
    for (f, g) in &non {
        let d = commutator_defect(f, g, &grid);
        ok &= !d.commutes && d.defect > 1e-3 && verify_uniform_bound(f, 0.0, g, 10, &grid, 1e-6).is_err();
        detail.push(format!("flagged {:.1e}", d.defect));
    }
    outcome(ok, detail.join(", "))
}

fn determinism(stages: &Stages, campaign: &[String]) -> Outcome {
    let (_, _, again) = counterexample(2, &ConstructionParams::default()).unwrap();
    let (map2, s2, r2, _) = &stages.runs[1];
    let same_report = again.render_text() == r2.render_text();
    let (_, again_state, _) = counterexample(2, &ConstructionParams::default()).unwrap();
    let same_state = again_state.to_json() == s2.to_json();
    let (v, rerun) = displacement_campaign(stages);
    let same_campaign = v.pass && rerun == campaign;

    let pts = r2_points(1000);
    let mut rng = stream_rng(11, 0);
    let random = AreaPreservingMap::new((0..6).map(|_| random_generator(&mut rng)).collect());
    let mut roundtrip = true;
    for map in [map2, &random] {
        let back = read_map(&write_map(map, None)).unwrap().map;
        roundtrip &= pts.iter().all(|p| back.eval_f64(*p) == map.eval_f64(*p));
    }
    outcome(
        same_report && same_state && same_campaign && roundtrip,
        format!(
            "report {same_report}, state {same_state}, campaign {same_campaign}, roundtrip on 1000 points {roundtrip}"
        ),
    )
}

fn main() {
    let t = Instant::now();
    let stages = Stages::build();
    let (campaign, lines) = displacement_campaign(&stages);
    let results = [
        ("generator soundness", generator_soundness()),
        ("continued-fraction oracle", continued_fraction_oracle()),
        ("rotation identities", rotation_identities()),
        ("bounded mean motion", bmm_bound(&stages)),
        ("displacement campaign", campaign),
        ("C0 bound for small rotation vectors", c0_small_rotation(&stages)),
        ("Kac return-time check", kac()),
        ("construction stages 1-3", construction(&stages)),
        ("rigidity search", rigidity()),
        ("centralizer suite", centralizer()),
        ("determinism and serialization", determinism(&stages, &lines)),
    ];
    let mut failed = 0;
    for (i, (name, v)) in results.iter().enumerate() {
        println!("[{}] {:>2} {name}: {}", if v.pass { "pass" } else { "FAIL" }, i + 1, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("{} of {} criteria pass in {:.1}s", results.len() - failed, results.len(), t.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
