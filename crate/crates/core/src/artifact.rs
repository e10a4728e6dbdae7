//! Small helpers for hash-stamped text artifacts.
//!
//! CSV files start with a `# config_hash: <hex>` line, JSON files carry a
//! `config_hash` field. Readers compare the stamp against the expected hash
//! and refuse mismatches.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const HASH_PREFIX: &str = "# config_hash: ";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `contents` to a sibling temp file, then renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    let tmp = path.with_extension("tmp~");
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(contents).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Prefixes CSV text with the hash line.
pub fn stamp_csv(hash: &str, body: &str) -> String {
    format!("{HASH_PREFIX}{hash}\n{body}")
}

/// Splits a stamped CSV into `(hash, body)`.
pub fn split_stamp<'a>(path: &Path, text: &'a str) -> Result<(&'a str, &'a str)> {
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    let hash = first
        .strip_prefix(HASH_PREFIX)
        .ok_or_else(|| Error::Data(format!("{}: missing config hash line", path.display())))?;
    Ok((hash.trim(), rest))
}

pub fn check_hash(path: &Path, expected: &str, found: &str) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Stale {
            path: path.to_path_buf(),
            expected: expected.to_string(),
            found: found.to_string(),
        })
    }
}

/// Reads a stamped CSV and returns its body after checking the hash.
pub fn read_csv_checked(path: &Path, expected: &str) -> Result<String> {
    let text = read_text(path)?;
    let (hash, body) = split_stamp(path, &text)?;
    check_hash(path, expected, hash)?;
    Ok(body.to_string())
}

pub fn write_csv(path: &Path, hash: &str, body: &str) -> Result<()> {
    write_atomic(path, stamp_csv(hash, body).as_bytes())
}

#[derive(Serialize, serde::Deserialize)]
struct Stamped<T> {
    config_hash: String,
    payload: T,
}

pub fn write_json<T: Serialize>(path: &Path, hash: &str, payload: &T) -> Result<()> {
    let doc = Stamped {
        config_hash: hash.to_string(),
        payload,
    };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path, expected: &str) -> Result<T> {
    let text = read_text(path)?;
    let doc: Stamped<T> = serde_json::from_str(&text)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    check_hash(path, expected, &doc.config_hash)?;
    Ok(doc.payload)
}

/// Shortest round-trip decimal representation, `NA` for missing values.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

pub fn parse_opt(path: &Path, s: &str) -> Result<Option<f64>> {
    if s == "NA" {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| Error::Data(format!("{}: bad number {s:?}", path.display())))
}
