//! Run manifests: every emitted report embeds the command, its fully
//! resolved configuration, the seed, input digests and a digest of the
//! manifest itself. The digest blanks the timestamp, so reruns with equal
//! configuration are recognizably identical.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub tool_version: String,
    pub input_digests: BTreeMap<String, String>,
    /// Seconds since the epoch; injectable for reproducible reruns.
    pub timestamp: u64,
    pub manifest_digest: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl RunManifest {
    pub fn new(
        command: &str,
        config: serde_json::Value,
        seed: Option<u64>,
        input_digests: BTreeMap<String, String>,
        timestamp: u64,
    ) -> Self {
        let mut manifest = Self {
            command: command.to_owned(),
            config,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            input_digests,
            timestamp,
            manifest_digest: String::new(),
        };
        let mut for_digest = manifest.clone();
        for_digest.timestamp = 0;
        let bytes = serde_json::to_vec(&for_digest).expect("manifest serializes");
        manifest.manifest_digest = sha256_hex(&bytes);
        manifest
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_ignores_timestamp() {
        let config = serde_json::json!({"trials": 10, "n_range": [1, 2]});
        let a = RunManifest::new("verify", config.clone(), Some(7), BTreeMap::new(), 100);
        let b = RunManifest::new("verify", config.clone(), Some(7), BTreeMap::new(), 999);
        assert_eq!(a.manifest_digest, b.manifest_digest);
        let c = RunManifest::new("verify", config, Some(8), BTreeMap::new(), 100);
        assert_ne!(a.manifest_digest, c.manifest_digest);
    }
}
