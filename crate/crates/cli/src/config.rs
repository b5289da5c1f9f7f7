//! Optional TOML run configuration. Command-line flags override values from
//! the file, which override built-in defaults.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Deserialize;
use tedkit::learners::{ForestConfig, MlpConfig};

pub const SEED_ENV: &str = "TEDKIT_SEED";

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub learner: Option<String>,
    pub mode: Option<String>,
    pub derive_y_from_e: Option<bool>,
    pub train_fraction: Option<f64>,
    pub seeds: Option<Vec<u64>>,
    pub format: Option<String>,
    pub mlp: Option<MlpConfig>,
    pub forest: Option<ForestConfig>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config file {}", path.display()))
    }

    /// Flag, then config file, then `TEDKIT_SEED`, then 0.
    pub fn seed(&self, flag: Option<u64>) -> Result<u64> {
        if let Some(s) = flag.or(self.seed) {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .with_context(|| format!("{SEED_ENV}={v} is not an unsigned integer")),
            Err(_) => Ok(0),
        }
    }
}
