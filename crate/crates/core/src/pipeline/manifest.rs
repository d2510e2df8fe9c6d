use std::collections::BTreeMap;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Name of the digest used for every hash in a manifest.
pub const HASH_ALGORITHM: &str = "SHA-256";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn hash_file(path: &Path) -> std::io::Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

/// Incremental hash over labelled parts; each part is length-prefixed so
/// distinct part lists never collide by concatenation.
#[derive(Default)]
pub struct InputHasher(Sha256);

impl InputHasher {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn part(&mut self, bytes: &[u8]) -> &mut Self {
        self.0.update((bytes.len() as u64).to_le_bytes());
        self.0.update(bytes);
        self
    }

    pub fn finish(self) -> String {
        hex::encode(self.0.finalize())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputRecord {
    /// Path as configured.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    /// Stable name used to match outputs across runs.
    pub logical_name: String,
    /// File name inside the output directory.
    pub file: String,
    pub sha256: String,
}

/// Everything needed to audit or reproduce one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub hash_algorithm: String,
    /// UTC start time, `yyyyMMdd-HHmmss`.
    pub started_at: String,
    pub analysis: String,
    pub pipeline: String,
    /// Effective configuration after command-line overrides.
    pub config: IndexMap<String, String>,
    /// Keyed by pipeline: `code`, `build`, `variability`.
    pub inputs: BTreeMap<String, InputRecord>,
    pub outputs: Vec<OutputRecord>,
    pub timings_ms: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

impl RunManifest {
    pub fn output(&self, logical_name: &str) -> Option<&OutputRecord> {
        self.outputs.iter().find(|o| o.logical_name == logical_name)
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("manifest serializes");
        bytes.push(b'\n');
        bytes
    }

    pub fn from_json(bytes: &[u8]) -> serde_json::Result<RunManifest> {
        serde_json::from_slice(bytes)
    }
}
