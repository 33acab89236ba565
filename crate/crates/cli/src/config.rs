use std::path::Path;

use attrition_core::{PlannerConfig, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::exit::{CliError, CliResult, Exit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { train_fraction: 0.8 }
    }
}

/// Contents of a `--config` file. Missing tables take their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub split: SplitConfig,
    pub planner: PlannerConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::usage(format!("config: {e}")))
    }

    /// Reads `path` (if any) and applies the `--seed` override.
    pub fn resolve(path: Option<&Path>, seed: Option<u64>) -> CliResult<Self> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError {
                    exit: Exit::Io,
                    message: format!("{}: {e}", p.display()),
                })?;
                Self::from_toml(&text)?
            }
            None => RunConfig::default(),
        };
        if let Some(seed) = seed {
            config.train.seed = seed;
            config.planner.seed = seed;
        }
        Ok(config)
    }
}
