//! Transcript storage: ordered exchanges in a line-delimited JSON file.
//!
//! Lookup keys are digests of the whitespace-normalized prompt, so cosmetic
//! prompt changes do not invalidate a recorded transcript.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::GatewayError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Exchange {
    pub request_hash: String,
    pub prompt: String,
    pub response: String,
    pub timestamp: String,
}

#[derive(Debug, Default)]
pub struct Transcript {
    pub exchanges: Vec<Exchange>,
}

impl Transcript {
    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let raw = std::fs::read_to_string(path).map_err(|e| {
            GatewayError::Transcript(format!("failed to read {}: {e}", path.display()))
        })?;
        let mut exchanges = Vec::new();
        for (i, line) in raw.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let exchange: Exchange = serde_json::from_str(line).map_err(|e| {
                GatewayError::Transcript(format!("{}:{}: {e}", path.display(), i + 1))
            })?;
            exchanges.push(exchange);
        }
        Ok(Self { exchanges })
    }

    pub fn append(path: &Path, exchange: &Exchange) -> Result<(), GatewayError> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| {
                GatewayError::Transcript(format!("failed to create {}: {e}", parent.display()))
            })?;
        }
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| {
                GatewayError::Transcript(format!("failed to open {}: {e}", path.display()))
            })?;
        let line = serde_json::to_string(exchange)
            .map_err(|e| GatewayError::Transcript(format!("serialize exchange: {e}")))?;
        writeln!(file, "{line}")
            .map_err(|e| GatewayError::Transcript(format!("write {}: {e}", path.display())))
    }
}

/// Collapses whitespace runs so cosmetic reformatting hashes identically.
pub fn normalize_prompt(prompt: &str) -> String {
    prompt.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn request_hash(prompt: &str) -> String {
    let digest = Sha256::digest(normalize_prompt(prompt).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
