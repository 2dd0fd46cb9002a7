use std::path::PathBuf;

use pseudorot::anosovkatok::{counterexample, ConstructionError, ConstructionParams};
use pseudorot::torusmap::{map_to_value, write_map};

use crate::config::RunConfig;
use crate::{write_file, BuildArgs, CliError};

fn construction(e: ConstructionError) -> CliError {
    match e {
        ConstructionError::Budget(_) | ConstructionError::RSearch { .. } => CliError::Budget(e.to_string()),
        ConstructionError::InvalidArgument(_) | ConstructionError::Map(_) => CliError::Input(e.to_string()),
        e => CliError::Failed(e.to_string()),
    }
}

pub fn run(a: &BuildArgs, cfg: &RunConfig) -> Result<(), CliError> {
    let params = ConstructionParams {
        seed: cfg.seed()?,
        max_stages: cfg.max_stages,
        q_cap_bits: cfg.q_cap_bits,
        periodicity_grid: cfg.grid,
        ..ConstructionParams::default()
    };
    let (map, state, report) = counterexample(a.stages, &params).map_err(construction)?;
    let metadata = serde_json::json!({
        "stages": state.n,
        "q": state.q().to_string(),
        "omega": [state.omega[0].to_string(), state.omega[1].to_string()],
        "conjugacy": map_to_value(&state.conjugacy()),
    });
    let name = format!("ak_stage{}.json", state.n);
    let map_path = cfg.output_path(a.out.as_deref(), &name).unwrap_or_else(|| PathBuf::from(&name));
    write_file(&map_path, &write_map(&map, Some(metadata)))?;
    let report_path = a
        .report
        .clone()
        .unwrap_or_else(|| map_path.with_extension("report.txt"));
    let text = report.render_text();
    write_file(&report_path, &text)?;
    if let Some(p) = &a.state {
        write_file(p, &state.to_json())?;
    }
    print!("{text}");
    println!("map: {}", map_path.display());
    println!("report: {}", report_path.display());
    if report.passed() {
        Ok(())
    } else {
        let failing: Vec<String> = report
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("({}) stage {}: {}", c.condition, c.stage, c.quantity))
            .collect();
        Err(CliError::Failed(failing.join("; ")))
    }
}
