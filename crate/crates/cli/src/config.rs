use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SEED_ENV: &str = "PSEUDOROT_SEED";

/// Run settings. Read from a JSON file, then overridden by flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    /// Side of the evaluation grids.
    pub grid: usize,
    /// Starting points for rotation and deviation estimates.
    pub samples: usize,
    pub iterations: usize,
    /// Monte-Carlo points per disc.
    pub mc_points: usize,
    pub discs: usize,
    pub kac_samples: usize,
    pub horizon: usize,
    pub chain_length: usize,
    pub n_max: usize,
    pub cf_terms: usize,
    pub score_terms: usize,
    pub tolerance: f64,
    pub out_dir: Option<PathBuf>,
    pub q_cap_bits: u64,
    pub max_stages: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: None,
            grid: 64,
            samples: 64,
            iterations: 1000,
            mc_points: 2048,
            discs: 200,
            kac_samples: 100_000,
            horizon: 100_000,
            chain_length: 16,
            n_max: 1000,
            cf_terms: 30,
            score_terms: 20,
            tolerance: 1e-6,
            out_dir: None,
            q_cap_bits: 2048,
            max_stages: 3,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| {
            CliError::Input(format!(
                "{}: line {}, column {}: {e}",
                path.display(),
                e.line(),
                e.column()
            ))
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let counts = [
            ("grid", self.grid),
            ("samples", self.samples),
            ("iterations", self.iterations),
            ("mc_points", self.mc_points),
            ("discs", self.discs),
            ("kac_samples", self.kac_samples),
            ("horizon", self.horizon),
            ("chain_length", self.chain_length),
            ("n_max", self.n_max),
            ("cf_terms", self.cf_terms),
            ("score_terms", self.score_terms),
            ("max_stages", self.max_stages),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(CliError::Input(format!("{name} must be positive")));
            }
        }
        if self.grid < 2 {
            return Err(CliError::Input("grid must be at least 2".into()));
        }
        if self.q_cap_bits == 0 {
            return Err(CliError::Input("q_cap_bits must be positive".into()));
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(CliError::Input(format!("tolerance must lie in (0, 1), got {}", self.tolerance)));
        }
        Ok(())
    }

    /// Flag, then config file, then the environment, then 0.
    pub fn seed(&self) -> Result<u64, CliError> {
        if let Some(s) = self.seed {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::Input(format!("{SEED_ENV} must be an unsigned integer, got `{v}`"))),
            Err(_) => Ok(0),
        }
    }

    /// `path` itself, or `name` inside the output directory.
    pub fn output_path(&self, path: Option<&Path>, name: &str) -> Option<PathBuf> {
        match (path, &self.out_dir) {
            (Some(p), _) => Some(p.to_path_buf()),
            (None, Some(dir)) => Some(dir.join(name)),
            (None, None) => None,
        }
    }
}
