use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.txt";

/// Record of one run, written as TOML next to the artifacts it lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub duration_seconds: f64,
    /// File name to hex SHA-256.
    pub files: BTreeMap<String, String>,
    pub config: ExperimentConfig,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

impl RunManifest {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest is always representable as TOML")
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Files in `dir` that are missing or whose checksum differs.
    pub fn mismatches(&self, dir: &Path) -> Vec<String> {
        self.files
            .iter()
            .filter(|(name, sum)| {
                std::fs::read(dir.join(name)).map_or(true, |bytes| sha256_hex(&bytes) != **sum)
            })
            .map(|(name, _)| name.clone())
            .collect()
    }
}
