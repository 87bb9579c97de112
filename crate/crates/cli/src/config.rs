use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sketchgrade_core::ScoringParams;
use sketchgrade_harness::SyntheticConfig;

use crate::error::CliError;

/// Values read from `--config`; command-line flags win over these.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Pack root used to resolve bare item ids.
    pub pack: Option<PathBuf>,
    /// Replaces every item's scoring parameters.
    pub scoring: Option<ScoringParams>,
    pub parallelism: Option<usize>,
    pub canvas: Option<(u32, u32)>,
    pub synthetic: Option<SyntheticConfig>,
    pub service: ServiceSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceSection {
    pub addr: Option<String>,
    pub token_env: Option<String>,
    pub max_nodes: Option<usize>,
    pub max_edges: Option<usize>,
    pub max_body_bytes: Option<usize>,
    pub idle_timeout_secs: Option<u64>,
    pub journal: Option<PathBuf>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Config, CliError> {
        let Some(path) = path else { return Ok(Config::default()) };
        let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        serde_json::from_str(&text).map_err(|e| CliError::Json { path: path.to_path_buf(), message: e.to_string() })
    }
}
