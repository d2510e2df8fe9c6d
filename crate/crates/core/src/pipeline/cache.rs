use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::writer::write_atomic;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Code,
    Build,
    Vm,
}

impl ModelKind {
    pub fn dir_name(self) -> &'static str {
        match self {
            ModelKind::Code => "code",
            ModelKind::Build => "build",
            ModelKind::Vm => "vm",
        }
    }
}

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("corrupt cache entry `{path}`: {message}")]
    Corrupt { path: PathBuf, message: String },
}

#[derive(Serialize)]
struct EntryRef<'a, T> {
    input_hash: &'a str,
    model: &'a T,
}

#[derive(Deserialize)]
struct Entry<T> {
    input_hash: String,
    model: T,
}

pub fn cache_path(cache_dir: &Path, kind: ModelKind, input_hash: &str) -> PathBuf {
    cache_dir.join(kind.dir_name()).join(format!("{input_hash}.json"))
}

/// Stores `model` under `cache_dir/<kind>/<input_hash>.json`.
pub fn cache_write<T: Serialize>(
    cache_dir: &Path,
    kind: ModelKind,
    input_hash: &str,
    model: &T,
) -> std::io::Result<PathBuf> {
    let path = cache_path(cache_dir, kind, input_hash);
    let bytes = serde_json::to_vec(&EntryRef { input_hash, model }).map_err(std::io::Error::other)?;
    write_atomic(&path, &bytes)?;
    Ok(path)
}

/// The cached model for `input_hash`, `None` on a miss. An unreadable entry
/// or one recorded for different inputs is reported as corrupt.
pub fn cache_read<T: DeserializeOwned>(
    cache_dir: &Path,
    kind: ModelKind,
    input_hash: &str,
) -> Result<Option<T>, CacheError> {
    let path = cache_path(cache_dir, kind, input_hash);
    let bytes = match std::fs::read(&path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(CacheError::Corrupt { path, message: e.to_string() }),
    };
    let entry: Entry<T> = serde_json::from_slice(&bytes)
        .map_err(|e| CacheError::Corrupt { path: path.clone(), message: e.to_string() })?;
    if entry.input_hash != input_hash {
        return Err(CacheError::Corrupt { path, message: "recorded input hash differs".into() });
    }
    Ok(Some(entry.model))
}
