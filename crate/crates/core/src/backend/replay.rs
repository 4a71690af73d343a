//! Recorded answers keyed by request digest.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::{request_digest, Backend, BackendError, BackendRequest};
use crate::template::Message;

pub const FIXTURE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fixture {
    pub messages: Vec<Message>,
    pub answer: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct FixtureFile {
    version: u32,
    fixtures: BTreeMap<String, Fixture>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FixtureStore {
    path: Option<PathBuf>,
    fixtures: BTreeMap<String, Fixture>,
}

impl FixtureStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Loads `path`; a missing file gives an empty store bound to it.
    pub fn load(path: &Path) -> Result<Self, BackendError> {
        let fixtures = match fs::read_to_string(path) {
            Ok(text) => {
                let file: FixtureFile = serde_json::from_str(&text)
                    .map_err(|e| BackendError::Io(format!("{}: {e}", path.display())))?;
                if file.version != FIXTURE_VERSION {
                    return Err(BackendError::Io(format!(
                        "{}: unsupported fixture version {}",
                        path.display(),
                        file.version
                    )));
                }
                file.fixtures
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => BTreeMap::new(),
            Err(e) => return Err(BackendError::Io(format!("{}: {e}", path.display()))),
        };
        Ok(FixtureStore { path: Some(path.to_path_buf()), fixtures })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.fixtures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixtures.is_empty()
    }

    pub fn fixtures(&self) -> &BTreeMap<String, Fixture> {
        &self.fixtures
    }

    pub fn record(&mut self, messages: &[Message], answer: impl Into<String>) -> String {
        let digest = request_digest(messages);
        self.fixtures.insert(digest.clone(), Fixture { messages: messages.to_vec(), answer: answer.into() });
        digest
    }

    pub fn lookup(&self, messages: &[Message]) -> Result<&str, BackendError> {
        let digest = request_digest(messages);
        match self.fixtures.get(&digest) {
            Some(f) => Ok(&f.answer),
            None => Err(BackendError::FixtureMissing { nearest: self.nearest(messages, 3), digest }),
        }
    }

    /// Digests of the recorded requests that share the most leading
    /// messages with `messages`, then the longest common prefix of the
    /// first differing message.
    pub fn nearest(&self, messages: &[Message], n: usize) -> Vec<String> {
        let mut scored: Vec<((usize, usize), &String)> = self
            .fixtures
            .iter()
            .map(|(d, f)| {
                let same = f.messages.iter().zip(messages).take_while(|(a, b)| a == b).count();
                let prefix = match (f.messages.get(same), messages.get(same)) {
                    (Some(a), Some(b)) => a.content.chars().zip(b.content.chars()).take_while(|(x, y)| x == y).count(),
                    _ => 0,
                };
                ((same, prefix), d)
            })
            .collect();
        scored.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1)));
        scored.into_iter().take(n).map(|(_, d)| d.clone()).collect()
    }

    /// Writes the store to its path atomically.
    pub fn save(&self) -> Result<(), BackendError> {
        let path = self.path.as_ref().ok_or_else(|| BackendError::Io("fixture store has no path".into()))?;
        let err = |e: io::Error| BackendError::Io(format!("{}: {e}", path.display()));
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        fs::create_dir_all(dir).map_err(err)?;
        let body = serde_json::to_string_pretty(&FixtureFile { version: FIXTURE_VERSION, fixtures: self.fixtures.clone() })
            .expect("fixtures serialize");
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(err)?;
        tmp.write_all(body.as_bytes()).map_err(err)?;
        tmp.write_all(b"\n").map_err(err)?;
        tmp.persist(path).map_err(|e| err(e.error))?;
        Ok(())
    }
}

/// Answers from recorded fixtures only.
pub struct ReplayBackend {
    store: FixtureStore,
}

impl ReplayBackend {
    pub fn new(store: FixtureStore) -> Self {
        ReplayBackend { store }
    }

    pub fn store(&self) -> &FixtureStore {
        &self.store
    }
}

impl Backend for ReplayBackend {
    fn complete(&self, request: &BackendRequest) -> Result<String, BackendError> {
        self.store.lookup(&request.messages).map(str::to_string)
    }
}

/// Forwards to an inner backend and records each successful exchange.
pub struct RecordingBackend {
    inner: Arc<dyn Backend>,
    store: Mutex<FixtureStore>,
}

impl RecordingBackend {
    pub fn new(inner: Arc<dyn Backend>, store: FixtureStore) -> Self {
        RecordingBackend { inner, store: Mutex::new(store) }
    }

    pub fn store(&self) -> FixtureStore {
        self.store.lock().unwrap().clone()
    }

    pub fn save(&self) -> Result<(), BackendError> {
        self.store.lock().unwrap().save()
    }
}

impl Backend for RecordingBackend {
    fn complete(&self, request: &BackendRequest) -> Result<String, BackendError> {
        let answer = self.inner.complete(request)?;
        self.store.lock().unwrap().record(&request.messages, answer.clone());
        Ok(answer)
    }
}
