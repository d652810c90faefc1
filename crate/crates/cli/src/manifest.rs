use std::fs;
use std::path::Path;

use nmrqsim::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Everything needed to reproduce one run. `config` holds the fully
/// resolved arguments of `command`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub config: serde_json::Value,
    pub inputs: Vec<InputRef>,
    pub seed: u64,
    pub version: String,
    pub timestamp: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputRef {
    pub path: String,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    pub fn new(command: &str, argv: &[String], config: serde_json::Value, inputs: Vec<InputRef>, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            argv: argv.iter().skip(1).cloned().collect(),
            config,
            inputs,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Validation(format!("cannot read manifest {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Schema(format!("manifest {}: {e}", path.display())))
    }

    /// Fails if any recorded input changed since the run.
    pub fn verify_inputs(&self) -> Result<()> {
        for input in &self.inputs {
            let bytes = fs::read(&input.path)
                .map_err(|e| Error::Validation(format!("cannot read {}: {e}", input.path)))?;
            if sha256_hex(&bytes) != input.sha256 {
                return Err(Error::Validation(format!("{} changed since the manifest was written", input.path)));
            }
        }
        Ok(())
    }
}
