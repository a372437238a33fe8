//! Atomic artifact writes, JSON helpers and content hashes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{AtPath, Result, Stage};

/// Writes through a sibling temporary file and a rename, so readers never
/// see a partial artifact.
pub fn write_atomic(stage: Stage, path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).at(stage, dir)?;
    }
    let tmp = tmp_path(path);
    fs::write(&tmp, bytes).at(stage, &tmp)?;
    fs::rename(&tmp, path).at(stage, path)
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".tmp");
    path.with_file_name(name)
}

pub fn write_json<T: Serialize>(stage: Stage, path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).at(stage, path)?;
    bytes.push(b'\n');
    write_atomic(stage, path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(stage: Stage, path: &Path) -> Result<T> {
    let bytes = fs::read(path).at(stage, path)?;
    serde_json::from_slice(&bytes).at(stage, path)
}

/// One JSON document per line.
pub fn write_lines<T: Serialize>(stage: Stage, path: &Path, items: &[T]) -> Result<()> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item).at(stage, path)?;
        out.push(b'\n');
    }
    write_atomic(stage, path, &out)
}

pub fn read_lines<T: DeserializeOwned>(stage: Stage, path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).at(stage, path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).at(stage, path))
        .collect()
}

/// Incremental SHA-256 over length-prefixed parts.
#[derive(Default)]
pub struct Hasher(Sha256);

impl Hasher {
    pub fn part(mut self, bytes: &[u8]) -> Self {
        self.0.update((bytes.len() as u64).to_le_bytes());
        self.0.update(bytes);
        self
    }

    pub fn json<T: Serialize>(self, value: &T) -> Self {
        // Serializing plain config structs cannot fail.
        let bytes = serde_json::to_vec(value).unwrap_or_default();
        self.part(&bytes)
    }

    pub fn hex(self) -> String {
        hex::encode(self.0.finalize())
    }
}

/// `path` relative to `base`, with forward slashes.
pub fn relative(base: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(base).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}
