use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use attrition_core::document::sha256_hex;
use serde::{Deserialize, Serialize};

use crate::exit::{CliError, CliResult, Exit};

pub const MANIFEST_FORMAT: &str = "attrition-run-manifest";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// One per invocation, written next to the primary output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub subcommand: String,
    pub seed: u64,
    pub config: serde_json::Value,
    /// Keyed by flag name.
    pub inputs: BTreeMap<String, InputDigest>,
    pub outputs: Vec<String>,
    /// Wall clock; the only field that differs between identical runs.
    pub duration_ms: u64,
}

impl RunManifest {
    pub fn new(subcommand: &str, seed: u64, config: serde_json::Value) -> Self {
        RunManifest {
            format: MANIFEST_FORMAT.to_string(),
            subcommand: subcommand.to_string(),
            seed,
            config,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            duration_ms: 0,
        }
    }

    pub fn input(&mut self, flag: &str, path: &Path) -> CliResult<()> {
        let bytes = std::fs::read(path).map_err(|e| CliError {
            exit: Exit::Io,
            message: format!("{}: {e}", path.display()),
        })?;
        self.inputs.insert(
            flag.to_string(),
            InputDigest {
                path: path.display().to_string(),
                sha256: sha256_hex(&bytes),
            },
        );
        Ok(())
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        write_text(path, &text)
    }
}

/// `out.json` -> `out.<kind>.json`.
pub fn sidecar(out: &Path, kind: &str) -> PathBuf {
    out.with_extension(format!("{kind}.json"))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError {
            exit: Exit::Io,
            message: format!("{}: {e}", dir.display()),
        })?;
    }
    std::fs::write(path, text).map_err(|e| CliError {
        exit: Exit::Io,
        message: format!("{}: {e}", path.display()),
    })
}
