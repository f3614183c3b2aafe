//! Reproducibility metadata embedded in every output the CLI writes.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifier::MODEL_FORMAT_VERSION;
use crate::data_io::DUMP_FORMAT_VERSION;
use crate::features::LAYOUT_VERSION;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reproducibility {
    pub tool_version: String,
    pub seed: Option<u64>,
    /// SHA-256 of the canonical JSON encoding of the effective configuration.
    pub config_hash: String,
    pub dump_format_version: u32,
    pub layout_version: u32,
    pub model_format_version: u32,
}

impl Reproducibility {
    pub fn new(config: &serde_json::Value, seed: Option<u64>) -> Self {
        Reproducibility {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config_hash: config_hash(config),
            dump_format_version: DUMP_FORMAT_VERSION,
            layout_version: LAYOUT_VERSION,
            model_format_version: MODEL_FORMAT_VERSION,
        }
    }
}

/// serde_json maps are ordered by key, so the encoding is canonical.
pub fn config_hash(config: &serde_json::Value) -> String {
    let bytes = serde_json::to_vec(config).expect("json values always encode");
    Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
