use pseudorot::rotation::{
    deviation_csv, deviation_series, estimate_rotation_set, estimate_rotation_vector, hull_csv, rigidity_csv,
    rigidity_search,
};
use pseudorot::centralizer::translation_sum;
use pseudorot::GridSpec;

use crate::config::RunConfig;
use crate::maps::{input, load, parse_pair};
use crate::{emit_csv, CliError, MeasureArgs, Quantity};

pub const CSV_HELP: &str = "\
CSV columns:
  rotation      rho_x,rho_y,residual,deviation_cap
  deviation     n,dev_x,dev_y,norm,proj_v   (worst sample at each n; proj_v needs --direction)
  rigidity      n,c0_dist,c1_dist           (ten best n <= n_max by grid C0 distance)
  rotation-set  vertex,rho_x,rho_y          (hull vertices)";

pub fn run(a: &MeasureArgs, cfg: &RunConfig) -> Result<(), CliError> {
    let name = match a.what {
        Quantity::Rotation => "rotation.csv",
        Quantity::Deviation => "deviation.csv",
        Quantity::Rigidity => "rigidity.csv",
        Quantity::RotationSet => "rotation_set.csv",
    };
    let csv_path = cfg.output_path(a.csv.as_deref(), name);
    match a.what {
        Quantity::Rotation => {
            let t = load(&a.target)?;
            let e = estimate_rotation_vector(&t.map, cfg.samples, cfg.iterations).map_err(input)?;
            println!("rotation vector: ({:.17e}, {:.17e})", e.vector[0], e.vector[1]);
            if let Some(exact) = translation_sum(&t.map) {
                println!("exact: ({}, {})", exact[0], exact[1]);
            }
            println!("residual: {:.6e}", e.residual);
            emit_csv(
                csv_path,
                &format!(
                    "rho_x,rho_y,residual,deviation_cap\n{:e},{:e},{:e},{:e}\n",
                    e.vector[0], e.vector[1], e.residual, e.deviation_cap
                ),
            )
        }
        Quantity::Deviation => {
            let t = load(&a.target)?;
            t.map.require_isotopic().map_err(input)?;
            let dir = a.direction.as_deref().map(parse_pair).transpose()?;
            let (omega, source) = t.rotation(cfg)?;
            let s = deviation_series(&t.map, omega, cfg.samples, cfg.iterations, dir);
            println!("rho: ({:.17e}, {:.17e}) [{source}]", omega[0], omega[1]);
            println!("kappa_hat: {:.6e}", s.kappa());
            if let Some(k) = s.kappa_along() {
                println!("kappa_along: {k:.6e}");
            }
            emit_csv(csv_path, &deviation_csv(&s))
        }
        Quantity::Rigidity => {
            let t = load(&a.target)?;
            let best = rigidity_search(&t.map, cfg.n_max, &GridSpec::new(cfg.grid));
            if let Some(b) = best.first() {
                println!("best n: {} (c0 {:.6e}, c1 {:.6e})", b.n, b.c0, b.c1);
            }
            emit_csv(csv_path, &rigidity_csv(&best))
        }
        Quantity::RotationSet => {
            let t = load(&a.target)?;
            if cfg.iterations < 2 {
                return Err(CliError::Input("rotation-set needs at least 2 iterations".into()));
            }
            let s = estimate_rotation_set(&t.map, cfg.samples, cfg.iterations).map_err(input)?;
            println!("diameter: {:.6e}", s.diameter);
            println!("pseudo-rotation: {}", s.is_pseudo_rotation());
            emit_csv(csv_path, &hull_csv(&s))
        }
    }
}
