//! Content hashes linking device, profile, model and report files.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

/// SHA-256 over the canonical JSON encoding of `value`, hex encoded.
pub fn content_hash<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let bytes = serde_json::to_vec(value)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// First 12 hex digits, for log lines.
pub fn short(hash: &str) -> &str {
    &hash[..hash.len().min(12)]
}
