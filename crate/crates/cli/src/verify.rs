use std::fmt::Write as _;

use pseudorot::centralizer::{commutator_defect, phi1, spread_csv, verify_uniform_bound, CentralizerError};
use pseudorot::displacement::{
    c0_bound_check, c_constant, first_return_stats, random_disc, verify_disc_displacement, DisplacementError,
    FundamentalDomain, SimpleDisc, Verdict,
};
use pseudorot::sampling::stream_rng;
use pseudorot::GridSpec;

use crate::config::RunConfig;
use crate::maps::{input, load, load_map, measure_kappa};
use crate::{emit_csv, CliError, Property, VerifyArgs};

pub const CSV_HELP: &str = "\
CSV columns:
  displacement  index,shape,area,threshold,verdict,hits,margin
  kac           z_x,z_y,n_d,l_x,l_y   (written only with --csv or --out-dir)
  centralizer   n,spread
  c0bound       lhs,lhs_certified,rhs,rhs_certified,hypothesis_holds,pass";

/// Largest disc areas tried per shape: round, rectangle, snake.
const AREA_CAPS: [f64; 3] = [0.3, 0.3, 0.1];

const LIFT_IDENTITY_TOLERANCE: f64 = 1e-9;

fn displacement_err(e: DisplacementError) -> CliError {
    match e {
        DisplacementError::InsufficientReturns { .. } => CliError::Failed(e.to_string()),
        e => CliError::Input(e.to_string()),
    }
}

fn domain() -> FundamentalDomain {
    FundamentalDomain::Centered([0.5, 0.5])
}

fn parse_disc(s: &str) -> Result<SimpleDisc, CliError> {
    let bad = || CliError::Input(format!("bad disc `{s}`; expected round:cx,cy,r or rect:cx,cy,hx,hy"));
    let (kind, body) = s.split_once(':').ok_or_else(bad)?;
    let v: Vec<f64> = body
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    match (kind.trim(), &v[..]) {
        ("round", [x, y, r]) => Ok(SimpleDisc::Round {
            center: [*x, *y],
            radius: *r,
        }),
        ("rect", [x, y, hx, hy]) => Ok(SimpleDisc::Rect {
            center: [*x, *y],
            half_sides: [*hx, *hy],
        }),
        _ => Err(bad()),
    }
}

pub fn run(a: &VerifyArgs, cfg: &RunConfig) -> Result<(), CliError> {
    let seed = cfg.seed()?;
    let t = load(&a.target)?;
    t.map.require_isotopic().map_err(input)?;
    let (omega, source) = t.rotation(cfg)?;
    let norm = omega[0].hypot(omega[1]);
    let kappa = match a.kappa {
        Some(k) if k >= 0.0 => k,
        Some(k) => return Err(CliError::Input(format!("kappa must be nonnegative, got {k}"))),
        None => measure_kappa(&t.map, omega, cfg),
    };
    println!("omega: ({:.17e}, {:.17e}) [{source}]", omega[0], omega[1]);
    println!("kappa_hat: {kappa:.6e}");
    let grid = GridSpec::new(cfg.grid);
    match a.prop {
        Property::Displacement => {
            let dom = domain();
            let threshold = c_constant(kappa, &dom).map_err(displacement_err)? * norm;
            let mut csv = String::from("index,shape,area,threshold,verdict,hits,margin\n");
            let (mut hits, mut disjoint, mut unknown, mut alarms) = (0, 0, 0, 0);
            for i in 0..cfg.discs {
                let kind = i % 3;
                let cap = AREA_CAPS[kind];
                let min_area = (1.01 * threshold).max(0.01 * cap);
                if min_area >= cap {
                    return Err(CliError::Input(format!(
                        "threshold {threshold:.3e} leaves no room for simple discs; try --power"
                    )));
                }
                let mut rng = stream_rng(seed, i as u64);
                let disc = random_disc(&mut rng, kind, &dom, min_area, cap);
                let r = verify_disc_displacement(&t.map, kappa, norm, &dom, &disc, cfg.mc_points, seed, i as u64)
                    .map_err(displacement_err)?;
                match r.verdict {
                    Verdict::Intersects => hits += 1,
                    Verdict::DisjointWithMargin => disjoint += 1,
                    Verdict::Inconclusive => unknown += 1,
                }
                alarms += usize::from(r.alarm);
                let verdict = match r.verdict {
                    Verdict::Intersects => "intersects",
                    Verdict::DisjointWithMargin => "disjoint-with-margin",
                    Verdict::Inconclusive => "inconclusive",
                };
                let margin = r.margin.map_or(String::new(), |m| format!("{m:e}"));
                let _ = writeln!(csv, "{i},{},{:e},{:e},{verdict},{},{margin}", r.shape, r.area, r.threshold, r.hits);
            }
            println!("threshold c(kappa, F)|omega|: {threshold:.6e}");
            println!("discs: {} intersecting, {disjoint} disjoint, {unknown} inconclusive", hits);
            println!("alarms: {alarms}");
            emit_csv(cfg.output_path(a.csv.as_deref(), "displacement.csv"), &csv)?;
            if alarms > 0 || disjoint > 0 {
                return Err(CliError::Failed(format!("{alarms} discs above the threshold were displaced off themselves")));
            }
            println!("result: pass");
            Ok(())
        }
        Property::C0bound => {
            let r = c0_bound_check(&t.map, kappa, norm, &grid).map_err(displacement_err)?;
            println!("lhs d_C0(F, Id): {:.6e} (certified {:.6e})", r.lhs, r.lhs_certified);
            println!("rhs max diam F(circle of radius sqrt(c |omega|)): {:.6e} (certified {:.6e})", r.rhs, r.rhs_certified);
            println!("hypothesis |omega| < 1/(2c): {}", r.hypothesis_holds);
            let csv = format!(
                "lhs,lhs_certified,rhs,rhs_certified,hypothesis_holds,pass\n{:e},{:e},{:e},{:e},{},{}\n",
                r.lhs, r.lhs_certified, r.rhs, r.rhs_certified, r.hypothesis_holds, r.pass
            );
            if let Some(p) = cfg.output_path(a.csv.as_deref(), "c0bound.csv") {
                emit_csv(Some(p), &csv)?;
            }
            if !r.hypothesis_holds {
                return Err(CliError::Input("the rotation vector is too large for the bound".into()));
            }
            if !r.pass {
                return Err(CliError::Failed(format!("lhs {:.6e} exceeds rhs {:.6e}", r.lhs, r.rhs)));
            }
            println!("result: pass");
            Ok(())
        }
        Property::Kac => {
            let disc = match &a.disc {
                Some(s) => parse_disc(s)?,
                None => SimpleDisc::Round {
                    center: [0.5, 0.5],
                    radius: 0.1,
                },
            };
            let s = first_return_stats(&t.map, &domain(), &disc, cfg.horizon, cfg.kac_samples, cfg.chain_length, seed)
                .map_err(displacement_err)?;
            println!("area: {:.6e}", s.area);
            println!("kac estimate: {:.6e} +- {:.3e}", s.kac_estimate, s.kac_std_error);
            println!("returned: {} of {}", s.returned, s.samples);
            println!("chain mean: {:.6e} over {} returns", s.chain_mean, s.chain_length);
            println!("lift identity error: {:.3e}", s.lift_identity_error);
            if let Some(p) = cfg.output_path(a.csv.as_deref(), "kac.csv") {
                let mut csv = String::from("z_x,z_y,n_d,l_x,l_y\n");
                for r in &s.records {
                    let _ = writeln!(csv, "{:e},{:e},{},{},{}", r.z[0], r.z[1], r.n_d, r.l_d[0], r.l_d[1]);
                }
                emit_csv(Some(p), &csv)?;
            }
            if !s.kac_pass {
                return Err(CliError::Failed("Kac estimate exceeds 1 + 3 sigma".into()));
            }
            if s.lift_identity_error > LIFT_IDENTITY_TOLERANCE {
                return Err(CliError::Failed(format!("lift identity error {:.3e}", s.lift_identity_error)));
            }
            println!("result: pass");
            Ok(())
        }
        Property::Centralizer => {
            let path = a.g.as_ref().ok_or_else(|| CliError::Input("--g is required".into()))?;
            let g = load_map(path)?.map;
            let cand = commutator_defect(&t.map, &g, &grid);
            println!("commutator defect: {:.3e}", cand.defect);
            let r = match verify_uniform_bound(&t.map, kappa, &g, cfg.iterations, &grid, cfg.tolerance) {
                Ok(r) => r,
                Err(CentralizerError::DoesNotCommute(d)) => {
                    return Err(CliError::Failed(format!("maps do not commute (defect {d:.3e})")))
                }
                Err(e) => return Err(input(e)),
            };
            let p = phi1(&g, cfg.grid).map_err(input)?;
            println!("phi1(g): ({:.17e}, {:.17e}) +- {:.3e}", p.value[0], p.value[1], p.error);
            println!("max spread: {:.6e} (bound 2 kappa_hat = {:.6e})", r.max_spread, r.bound);
            println!("bmm deviation of g: {:.6e}", r.bmm_deviation);
            println!("note: {}", r.x0_assumption);
            emit_csv(cfg.output_path(a.csv.as_deref(), "spread.csv"), &spread_csv(&r))?;
            if !r.pass {
                return Err(CliError::Failed(format!("spread {:.6e} exceeds {:.6e}", r.max_spread, r.bound)));
            }
            println!("result: pass");
            Ok(())
        }
    }
}
