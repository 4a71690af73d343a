//! Content-addressed store of generated code, one JSON file per key.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::metadata::FrameMetadata;

/// Prefix of every key serialization. Bump when the layout changes.
pub const KEY_VERSION: u8 = 1;
/// Version of the stored entry format.
pub const ENTRY_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CacheKey(String);

impl CacheKey {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Accepts 64 lowercase hex digits.
    pub fn parse(s: &str) -> Option<CacheKey> {
        (s.len() == 64 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))).then(|| CacheKey(s.to_string()))
    }
}

impl fmt::Display for CacheKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn field(h: &mut Sha256, bytes: &[u8]) {
    h.update((bytes.len() as u64).to_le_bytes());
    h.update(bytes);
}

/// Key for generating the next step of a conversation. Row data enters
/// only through the automated metadata.
pub fn build_state_key<'a>(
    metadata: &FrameMetadata,
    history: impl IntoIterator<Item = (&'a str, &'a str)>,
    query: &str,
    toolset: &BTreeSet<String>,
    return_types: &BTreeSet<String>,
) -> CacheKey {
    let mut h = Sha256::new();
    h.update([KEY_VERSION]);
    field(&mut h, metadata.canonical().as_bytes());
    let history: Vec<_> = history.into_iter().collect();
    h.update((history.len() as u64).to_le_bytes());
    for (q, c) in history {
        field(&mut h, q.as_bytes());
        field(&mut h, c.as_bytes());
    }
    field(&mut h, query.as_bytes());
    for set in [toolset, return_types] {
        h.update((set.len() as u64).to_le_bytes());
        for item in set {
            field(&mut h, item.as_bytes());
        }
    }
    CacheKey(hex::encode(h.finalize()))
}

/// Digest identifying a frame instance: automated metadata and description.
pub fn instance_digest(metadata: &FrameMetadata) -> String {
    let mut h = Sha256::new();
    h.update([KEY_VERSION]);
    field(&mut h, serde_json::to_string(&metadata.automated).expect("serializable").as_bytes());
    field(&mut h, metadata.description.as_bytes());
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub version: u32,
    pub instance: String,
    pub return_type: String,
    pub code: String,
}

impl CacheEntry {
    pub fn new(instance: impl Into<String>, return_type: impl Into<String>, code: impl Into<String>) -> Self {
        CacheEntry {
            version: ENTRY_VERSION,
            instance: instance.into(),
            return_type: return_type.into(),
            code: code.into(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("cache I/O error at {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("corrupt cache entry {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CacheError + '_ {
    move |source| CacheError::Io { path: path.to_path_buf(), source }
}

/// Outcome of a bulk removal. Failures do not stop the sweep.
#[derive(Debug, Default)]
pub struct Removal {
    pub removed: usize,
    pub errors: Vec<CacheError>,
}

#[derive(Debug, Clone)]
pub struct CacheStore {
    dir: PathBuf,
}

impl CacheStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        CacheStore { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(key.as_str())
    }

    pub fn get(&self, key: &CacheKey) -> Result<Option<CacheEntry>, CacheError> {
        let path = self.path(key);
        let raw = match fs::read(&path) {
            Ok(raw) => raw,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(io_err(&path)(e)),
        };
        let entry: CacheEntry =
            serde_json::from_slice(&raw).map_err(|e| CacheError::Corrupt { path: path.clone(), reason: e.to_string() })?;
        if entry.version != ENTRY_VERSION {
            return Ok(None);
        }
        Ok(Some(entry))
    }

    /// Writes to a temporary file in the cache directory, then renames it
    /// over the destination.
    pub fn set(&self, key: &CacheKey, entry: &CacheEntry) -> Result<(), CacheError> {
        fs::create_dir_all(&self.dir).map_err(io_err(&self.dir))?;
        let mut tmp = tempfile::Builder::new().prefix(".tmp-").tempfile_in(&self.dir).map_err(io_err(&self.dir))?;
        let body = serde_json::to_vec_pretty(entry).expect("serializable");
        tmp.write_all(&body).map_err(io_err(tmp.path()))?;
        tmp.as_file().sync_all().map_err(io_err(tmp.path()))?;
        let dest = self.path(key);
        tmp.persist(&dest).map_err(|e| CacheError::Io { path: dest, source: e.error })?;
        Ok(())
    }

    pub fn remove(&self, key: &CacheKey) -> Result<bool, CacheError> {
        let path = self.path(key);
        match fs::remove_file(&path) {
            Ok(()) => Ok(true),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(false),
            Err(e) => Err(io_err(&path)(e)),
        }
    }

    /// All keys currently stored, sorted.
    pub fn keys(&self) -> Result<Vec<CacheKey>, CacheError> {
        let rd = match fs::read_dir(&self.dir) {
            Ok(rd) => rd,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(io_err(&self.dir)(e)),
        };
        let mut keys = Vec::new();
        for item in rd {
            let item = item.map_err(io_err(&self.dir))?;
            if let Some(k) = item.file_name().to_str().and_then(CacheKey::parse) {
                keys.push(k);
            }
        }
        keys.sort();
        Ok(keys)
    }

    pub fn remove_keys<'a>(&self, keys: impl IntoIterator<Item = &'a CacheKey>) -> Removal {
        let mut out = Removal::default();
        for k in keys {
            match self.remove(k) {
                Ok(true) => out.removed += 1,
                Ok(false) => {}
                Err(e) => out.errors.push(e),
            }
        }
        out
    }

    /// Removes every entry recorded for `instance`.
    pub fn remove_instance(&self, instance: &str) -> Removal {
        let keys = match self.keys() {
            Ok(k) => k,
            Err(e) => return Removal { removed: 0, errors: vec![e] },
        };
        let mut out = Removal::default();
        for k in keys {
            match self.get(&k) {
                Ok(Some(entry)) if entry.instance == instance => match self.remove(&k) {
                    Ok(true) => out.removed += 1,
                    Ok(false) => {}
                    Err(e) => out.errors.push(e),
                },
                Ok(_) => {}
                Err(e) => out.errors.push(e),
            }
        }
        out
    }

    /// Removes every entry.
    pub fn clear(&self) -> Removal {
        match self.keys() {
            Ok(keys) => self.remove_keys(&keys),
            Err(e) => Removal { removed: 0, errors: vec![e] },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_parse_only_lowercase_hex() {
        assert!(CacheKey::parse(&"a".repeat(64)).is_some());
        assert!(CacheKey::parse(&"A".repeat(64)).is_none());
        assert!(CacheKey::parse(".tmp-abc").is_none());
    }

    #[test]
    fn round_trip_and_miss() {
        let dir = tempfile::tempdir().unwrap();
        let store = CacheStore::new(dir.path().join("c"));
        let key = CacheKey("0".repeat(64));
        assert!(store.get(&key).unwrap().is_none());
        let entry = CacheEntry::new("i", "int", "def execute(df_1):\n    return 1\n");
        store.set(&key, &entry).unwrap();
        assert_eq!(store.get(&key).unwrap(), Some(entry));
        assert_eq!(store.keys().unwrap(), vec![key]);
    }
}
