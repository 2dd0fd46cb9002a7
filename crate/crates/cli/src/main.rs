//! `pseudorot`: classify rotation vectors, build the Anosov–Katok stages and
//! measure or verify maps stored as JSON files.

mod classify;
mod config;
mod construct;
mod maps;
mod measure;
mod verify;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::RunConfig;

const AFTER_HELP: &str = "\
Exit codes: 0 all checks passed, 1 a check failed, 2 input error, 3 budget refusal.
The default seed is read from PSEUDOROT_SEED when neither --seed nor the config sets one.";

#[derive(Parser, Debug)]
#[command(name = "pseudorot", version, about = "Pseudo-rotations of the two-torus", after_help = AFTER_HELP)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// JSON run configuration; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for CSV and report files.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Side of the evaluation grids.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Starting points for rotation and deviation estimates.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Iterates per starting point.
    #[arg(long, global = true)]
    iterations: Option<usize>,
    #[arg(long, global = true)]
    tolerance: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify a rotation vector or a Liouville construction.
    Classify(ClassifyArgs),
    /// Build the Anosov–Katok stages and write the last map.
    BuildAk(BuildArgs),
    /// Measure a map and write CSV data.
    #[command(after_help = measure::CSV_HELP)]
    Measure(MeasureArgs),
    /// Check a quantitative property of a map.
    #[command(after_help = verify::CSV_HELP)]
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    /// Vector such as `rat:1/3,2/5` or `surd:sqrt2-1,1/2`, or a single frequency.
    #[arg(long, conflicts_with = "liouville", required_unless_present = "liouville")]
    pub omega: Option<String>,
    /// Relation `c,d,p,q` meaning `c·ω₁ + d·ω₂ + p/q = 0`.
    #[arg(long, allow_hyphen_values = true)]
    pub relation: Option<String>,
    /// Liouville construction such as `growth=2^q,stages=3,q1=2`.
    #[arg(long)]
    pub liouville: Option<String>,
    /// Continued-fraction terms.
    #[arg(long)]
    pub cf_terms: Option<usize>,
    /// Number of `n` in the super-Liouville score table.
    #[arg(long)]
    pub score_terms: Option<usize>,
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    #[arg(long)]
    pub stages: usize,
    /// Map file of the last stage.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Text report; defaults to the map path with `.report.txt`.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Stage state as JSON.
    #[arg(long)]
    pub state: Option<PathBuf>,
    #[arg(long)]
    pub q_cap_bits: Option<u64>,
    #[arg(long)]
    pub max_stages: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    Rotation,
    Deviation,
    Rigidity,
    RotationSet,
}

#[derive(Args, Debug)]
pub struct MapArgs {
    #[arg(long)]
    pub map: PathBuf,
    /// Use the `m`-th power of the map.
    #[arg(long)]
    pub power: Option<String>,
    /// Rotation vector of the (powered) map, `x,y`; read from the map
    /// metadata or estimated when absent.
    #[arg(long, allow_hyphen_values = true)]
    pub omega: Option<String>,
}

#[derive(Args, Debug)]
pub struct MeasureArgs {
    #[command(flatten)]
    pub target: MapArgs,
    #[arg(long, value_enum)]
    pub what: Quantity,
    /// CSV output file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Direction `v` for the bounded-deviation projection.
    #[arg(long, allow_hyphen_values = true)]
    pub direction: Option<String>,
    #[arg(long)]
    pub n_max: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Property {
    Displacement,
    C0bound,
    Kac,
    Centralizer,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub target: MapArgs,
    #[arg(long, value_enum)]
    pub prop: Property,
    /// Deviation bound to use instead of measuring one.
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub discs: Option<usize>,
    /// Disc for `kac`: `round:cx,cy,r` or `rect:cx,cy,hx,hy`.
    #[arg(long, allow_hyphen_values = true)]
    pub disc: Option<String>,
    /// Second map for `centralizer`.
    #[arg(long)]
    pub g: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    /// A check ran and failed.
    Failed(String),
    Input(String),
    Budget(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Input(_) => 2,
            CliError::Budget(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Failed(m) => write!(f, "check failed: {m}"),
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Budget(m) => write!(f, "budget refusal: {m}"),
        }
    }
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

/// Writes `csv` to `path` when given, to stdout otherwise.
pub fn emit_csv(path: Option<PathBuf>, csv: &str) -> Result<(), CliError> {
    match path {
        Some(p) => {
            write_file(&p, csv)?;
            println!("csv: {}", p.display());
            Ok(())
        }
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn resolve(global: &GlobalArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &global.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if global.seed.is_some() {
        cfg.seed = global.seed;
    }
    if global.out_dir.is_some() {
        cfg.out_dir = global.out_dir.clone();
    }
    cfg.grid = global.grid.unwrap_or(cfg.grid);
    cfg.samples = global.samples.unwrap_or(cfg.samples);
    cfg.iterations = global.iterations.unwrap_or(cfg.iterations);
    cfg.tolerance = global.tolerance.unwrap_or(cfg.tolerance);
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = resolve(&cli.global)?;
    match cli.command {
        Command::Classify(a) => classify::run(&a, &cfg),
        Command::BuildAk(a) => {
            cfg.q_cap_bits = a.q_cap_bits.unwrap_or(cfg.q_cap_bits);
            cfg.max_stages = a.max_stages.unwrap_or(cfg.max_stages);
            cfg.validate()?;
            construct::run(&a, &cfg)
        }
        Command::Measure(a) => {
            cfg.n_max = a.n_max.unwrap_or(cfg.n_max);
            cfg.validate()?;
            measure::run(&a, &cfg)
        }
        Command::Verify(a) => {
            cfg.discs = a.discs.unwrap_or(cfg.discs);
            cfg.validate()?;
            verify::run(&a, &cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
