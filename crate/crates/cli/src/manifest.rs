//! Run manifest: what ran, with which config, producing which files.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    /// SHA-256 of the effective serialized config.
    pub config_hash: String,
    pub root_seed: u64,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<String>,
}

pub struct ManifestBuilder {
    command: String,
    config_hash: String,
    root_seed: u64,
    started_at: String,
}

pub fn hash_config(serialized: &str) -> String {
    let digest = Sha256::digest(serialized.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl ManifestBuilder {
    pub fn start(command: &str, serialized_config: &str, root_seed: u64) -> Self {
        ManifestBuilder {
            command: command.to_string(),
            config_hash: hash_config(serialized_config),
            root_seed,
            started_at: chrono::Utc::now().to_rfc3339(),
        }
    }

    /// Serializes the manifest and renames it into place so a partial write
    /// never looks like a finished run.
    pub fn finish(self, path: &Path, outputs: &[PathBuf]) -> std::io::Result<()> {
        let manifest = RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: self.command,
            config_hash: self.config_hash,
            root_seed: self.root_seed,
            started_at: self.started_at,
            finished_at: chrono::Utc::now().to_rfc3339(),
            outputs: outputs
                .iter()
                .map(|p| p.file_name().unwrap_or_default().to_string_lossy().to_string())
                .collect(),
        };
        let text = serde_json::to_string_pretty(&manifest)?;
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, text)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }
}
