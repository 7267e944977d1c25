//! Run manifest: the resolved config, the seed, and content hashes of every
//! input and output. `run_digest` covers everything except `created_at`, so
//! it is identical across reruns of the same configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::artifacts::sha256_hex;
use crate::config::PipelineConfig;
use crate::CliError;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

impl FileDigest {
    pub fn of_bytes(path: String, bytes: &[u8]) -> Self {
        Self {
            path,
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        }
    }

    pub fn of_file(path: &Path) -> Result<Self, CliError> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Ingest(format!("cannot read {}: {e}", path.display())))?;
        Ok(Self::of_bytes(path.display().to_string(), &bytes))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub created_at: String,
    pub seed: u64,
    pub config: PipelineConfig,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub run_digest: String,
}

#[derive(Serialize)]
struct DigestBody<'a> {
    tool: &'a str,
    version: &'a str,
    command: &'a str,
    seed: u64,
    config: &'a PipelineConfig,
    inputs: &'a [FileDigest],
    outputs: &'a [FileDigest],
}

impl Manifest {
    pub fn new(
        command: &str,
        config: PipelineConfig,
        seed: u64,
        inputs: Vec<FileDigest>,
        outputs: Vec<FileDigest>,
    ) -> Self {
        let mut m = Self {
            tool: "abusetrend".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            seed,
            config,
            inputs,
            outputs,
            run_digest: String::new(),
        };
        m.run_digest = m.compute_digest();
        m
    }

    pub fn compute_digest(&self) -> String {
        let body = DigestBody {
            tool: &self.tool,
            version: &self.version,
            command: &self.command,
            seed: self.seed,
            config: &self.config,
            inputs: &self.inputs,
            outputs: &self.outputs,
        };
        sha256_hex(&serde_json::to_vec(&body).expect("manifest body serializes"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_ignores_timestamp() {
        let a = Manifest::new("fit", PipelineConfig::default(), 3, vec![], vec![]);
        let mut b = a.clone();
        b.created_at = "1970-01-01T00:00:00Z".into();
        assert_eq!(a.run_digest, b.compute_digest());
        b.seed = 4;
        assert_ne!(a.run_digest, b.compute_digest());
    }
}
