//! Run manifests: what a command read, wrote and with which settings, tied
//! together by SHA-256 content hashes.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: impl AsRef<[u8]>) -> String {
    let digest = Sha256::digest(bytes.as_ref());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn hash_file(path: &Path) -> std::io::Result<String> {
    Ok(sha256_hex(std::fs::read(path)?))
}

/// Current time, or `SOURCE_DATE_EPOCH` when set so that reruns are
/// byte-identical.
pub fn timestamp() -> String {
    let time = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|secs| DateTime::<Utc>::from_timestamp(secs, 0))
        .unwrap_or_else(Utc::now);
    time.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Input role to content hash.
    pub input_hashes: BTreeMap<String, String>,
    /// Output role to content hash.
    pub output_hashes: BTreeMap<String, String>,
    pub started_at: String,
    pub finished_at: String,
    /// Command-specific facts such as per-property counts.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, serde_json::Value>,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, config: &str, seed: Option<u64>) -> Self {
        RunManifest {
            command: command.into(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: sha256_hex(config),
            seed,
            input_hashes: BTreeMap::new(),
            output_hashes: BTreeMap::new(),
            started_at: timestamp(),
            finished_at: String::new(),
            details: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, role: impl Into<String>, path: &Path) -> std::io::Result<()> {
        self.input_hashes.insert(role.into(), hash_file(path)?);
        Ok(())
    }

    pub fn output(&mut self, role: impl Into<String>, path: &Path) -> std::io::Result<()> {
        self.output_hashes.insert(role.into(), hash_file(path)?);
        Ok(())
    }

    pub fn detail(&mut self, key: impl Into<String>, value: impl Serialize) {
        self.details.insert(key.into(), serde_json::to_value(value).expect("detail serializes"));
    }

    pub fn finish(mut self) -> Self {
        self.finished_at = timestamp();
        self
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        text
    }
}
