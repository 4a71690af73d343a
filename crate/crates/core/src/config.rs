//! Process-wide settings, read from `SMARTFRAME_*` environment variables.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use crate::backend::{Backend, BackendError, Corpus, FixtureStore, LiveBackend, ModelParams, RagBackend, ReplayBackend};
use crate::sandbox::ValidationMode;

pub const ENV_PREFIX: &str = "SMARTFRAME_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BackendKind {
    Live,
    Rag,
    #[default]
    Replay,
}

impl BackendKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BackendKind::Live => "live",
            BackendKind::Rag => "rag",
            BackendKind::Replay => "replay",
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BackendKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "live" => Ok(BackendKind::Live),
            "rag" => Ok(BackendKind::Rag),
            "replay" => Ok(BackendKind::Replay),
            _ => Err(ConfigError::Invalid { name: "BACKEND".into(), value: s.into(), expected: "live, rag or replay" }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("invalid value {value:?} for {name}; expected {expected}")]
    Invalid { name: String, value: String, expected: &'static str },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub backend: BackendKind,
    pub cache_dir: PathBuf,
    pub corpus_dir: PathBuf,
    /// JSON file holding recorded answers.
    pub fixtures: PathBuf,
    pub safe_mode: bool,
    /// Where generated code reads and writes files, and where `ai.py` goes.
    pub workdir: PathBuf,
    pub templates_dir: Option<PathBuf>,
    pub validation: ValidationMode,
    pub params: ModelParams,
    pub base_url: String,
    pub api_key: Option<String>,
    pub timeout_secs: u64,
    pub rag_k: usize,
    /// Echo printed code, transcripts and instructions to stdout.
    pub echo: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            backend: BackendKind::Replay,
            cache_dir: PathBuf::from(".smartframe/cache"),
            corpus_dir: PathBuf::from(".smartframe/corpus"),
            fixtures: PathBuf::from(".smartframe/fixtures.json"),
            safe_mode: false,
            workdir: PathBuf::from("."),
            templates_dir: None,
            validation: ValidationMode::Excerpt,
            params: ModelParams::default(),
            base_url: "http://localhost:8000/v1".into(),
            api_key: None,
            timeout_secs: 120,
            rag_k: 3,
            echo: true,
        }
    }
}

pub fn parse_bool(name: &str, value: &str) -> Result<bool, ConfigError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" | "" => Ok(false),
        _ => Err(ConfigError::Invalid { name: name.into(), value: value.into(), expected: "a boolean" }),
    }
}

fn parse<T: FromStr>(name: &str, value: &str, expected: &'static str) -> Result<T, ConfigError> {
    value
        .trim()
        .parse()
        .map_err(|_| ConfigError::Invalid { name: name.into(), value: value.into(), expected })
}

impl Config {
    pub fn from_env() -> Result<Self, ConfigError> {
        Self::from_lookup(|k| std::env::var(format!("{ENV_PREFIX}{k}")).ok())
    }

    /// Builds a configuration from variable names without the prefix.
    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let mut c = Config::default();
        if let Some(v) = get("BACKEND") {
            c.backend = v.parse()?;
        }
        if let Some(v) = get("CACHE_DIR") {
            c.cache_dir = v.into();
        }
        if let Some(v) = get("CORPUS_DIR") {
            c.corpus_dir = v.into();
        }
        if let Some(v) = get("FIXTURES") {
            c.fixtures = v.into();
        }
        if let Some(v) = get("SAFE_MODE") {
            c.safe_mode = parse_bool("SAFE_MODE", &v)?;
        }
        if let Some(v) = get("WORKDIR") {
            c.workdir = v.into();
        }
        if let Some(v) = get("TEMPLATES_DIR") {
            c.templates_dir = Some(v.into());
        }
        if let Some(v) = get("VALIDATION") {
            c.validation = match v.trim() {
                "excerpt" => ValidationMode::Excerpt,
                "synthetic" => ValidationMode::Synthetic,
                _ => return Err(ConfigError::Invalid { name: "VALIDATION".into(), value: v, expected: "excerpt or synthetic" }),
            };
        }
        if let Some(v) = get("MODEL") {
            c.params.model = v;
        }
        if let Some(v) = get("TEMPERATURE") {
            c.params.temperature = parse("TEMPERATURE", &v, "a number")?;
        }
        if let Some(v) = get("MAX_TOKENS") {
            c.params.max_tokens = parse("MAX_TOKENS", &v, "a positive integer")?;
        }
        if let Some(v) = get("BASE_URL") {
            c.base_url = v;
        }
        if let Some(v) = get("API_KEY") {
            c.api_key = Some(v).filter(|s| !s.is_empty());
        }
        if let Some(v) = get("TIMEOUT") {
            c.timeout_secs = parse("TIMEOUT", &v, "seconds as an integer")?;
        }
        if let Some(v) = get("RAG_K") {
            c.rag_k = parse("RAG_K", &v, "a non-negative integer")?;
        }
        if let Some(v) = get("ECHO") {
            c.echo = parse_bool("ECHO", &v)?;
        }
        Ok(c)
    }

    /// Effective settings as (name, value) pairs, credentials masked.
    pub fn display_pairs(&self) -> Vec<(&'static str, String)> {
        let path = |p: &PathBuf| p.display().to_string();
        vec![
            ("backend", self.backend.to_string()),
            ("cache_dir", path(&self.cache_dir)),
            ("corpus_dir", path(&self.corpus_dir)),
            ("fixtures", path(&self.fixtures)),
            ("safe_mode", self.safe_mode.to_string()),
            ("workdir", path(&self.workdir)),
            ("templates_dir", self.templates_dir.as_ref().map_or("(bundled)".into(), path)),
            ("validation", self.validation.as_str().into()),
            ("model", self.params.model.clone()),
            ("temperature", self.params.temperature.to_string()),
            ("max_tokens", self.params.max_tokens.to_string()),
            ("base_url", self.base_url.clone()),
            ("api_key", if self.api_key.is_some() { "****".into() } else { "(unset)".into() }),
            ("timeout_secs", self.timeout_secs.to_string()),
            ("rag_k", self.rag_k.to_string()),
        ]
    }

    fn live(&self) -> Result<LiveBackend, BackendError> {
        LiveBackend::new(&self.base_url, self.api_key.clone(), Duration::from_secs(self.timeout_secs))
    }

    /// The backend selected by `backend`.
    pub fn build_backend(&self) -> Result<Arc<dyn Backend>, BackendError> {
        Ok(match self.backend {
            BackendKind::Replay => Arc::new(ReplayBackend::new(FixtureStore::load(&self.fixtures)?)),
            BackendKind::Live => Arc::new(self.live()?),
            BackendKind::Rag => {
                let corpus = Corpus::load_dir(&self.corpus_dir).map_err(|e| BackendError::Config(e.to_string()))?;
                Arc::new(RagBackend::new(Arc::new(self.live()?), corpus, self.rag_k)?)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn from(pairs: &[(&str, &str)]) -> Result<Config, ConfigError> {
        let m: BTreeMap<String, String> = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        Config::from_lookup(|k| m.get(k).cloned())
    }

    #[test]
    fn defaults_to_replay() {
        assert_eq!(from(&[]).unwrap().backend, BackendKind::Replay);
    }

    #[test]
    fn overrides_and_masking() {
        let c = from(&[("CACHE_DIR", "/tmp/x"), ("API_KEY", "sk-secret"), ("SAFE_MODE", "yes")]).unwrap();
        assert_eq!(c.cache_dir, PathBuf::from("/tmp/x"));
        assert!(c.safe_mode);
        let shown: Vec<String> = c.display_pairs().into_iter().map(|(k, v)| format!("{k}={v}")).collect();
        assert!(shown.contains(&"api_key=****".to_string()));
        assert!(!shown.iter().any(|s| s.contains("sk-secret")));
    }

    #[test]
    fn bad_values_are_named() {
        let err = from(&[("BACKEND", "cloud")]).unwrap_err();
        assert!(err.to_string().contains("BACKEND"));
        assert!(from(&[("MAX_TOKENS", "-1")]).is_err());
    }
}
