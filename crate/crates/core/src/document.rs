//! Versioned, checksummed JSON documents.
//!
//! Every persisted artifact (model, Q-table, encodings) is wrapped in the same
//! envelope:
//!
//! ```json
//! { "format": "...", "format_version": 1, "checksum": "<sha256>", "payload": { ... } }
//! ```
//!
//! The checksum is the SHA-256 of the payload rendered as compact JSON with
//! sorted keys, so it does not depend on whitespace in the stored file.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn payload_checksum(payload: &Value) -> String {
    // `Value` keeps object keys in a BTreeMap, so this rendering is canonical.
    sha256_hex(payload.to_string().as_bytes())
}

pub fn encode<T: Serialize>(format: &str, version: u32, payload: &T) -> Result<String> {
    let payload = serde_json::to_value(payload).map_err(|e| Error::parse(format, e))?;
    let checksum = payload_checksum(&payload);
    let doc = serde_json::json!({
        "format": format,
        "format_version": version,
        "checksum": checksum,
        "payload": payload,
    });
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| Error::parse(format, e))?;
    text.push('\n');
    Ok(text)
}

pub fn decode<T: DeserializeOwned>(text: &str, format: &str, supported: u32) -> Result<T> {
    let doc: Value = serde_json::from_str(text).map_err(|e| Error::parse(format, e))?;
    let found = doc
        .get("format")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::parse(format, "missing `format` field"))?;
    if found != format {
        return Err(Error::WrongFormat(found.to_string()));
    }
    let version = doc
        .get("format_version")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::parse(format, "missing `format_version` field"))?;
    if version > u64::from(supported) || version == 0 {
        return Err(Error::UnsupportedVersion {
            found: u32::try_from(version).unwrap_or(u32::MAX),
            supported,
        });
    }
    let stored = doc
        .get("checksum")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::parse(format, "missing `checksum` field"))?;
    let payload = doc
        .get("payload")
        .ok_or_else(|| Error::parse(format, "missing `payload` field"))?;
    let computed = payload_checksum(payload);
    if computed != stored {
        return Err(Error::Checksum {
            stored: stored.to_string(),
            computed,
        });
    }
    serde_json::from_value(payload.clone()).map_err(|e| Error::parse(format, e))
}

pub fn write<T: Serialize>(path: &Path, format: &str, version: u32, payload: &T) -> Result<()> {
    let text = encode(format, version, payload)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read<T: DeserializeOwned>(path: &Path, format: &str, supported: u32) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode(&text, format, supported)
}
