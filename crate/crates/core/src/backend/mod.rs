//! Model backends: anything that maps a message list to an answer.

mod live;
mod rag;
mod replay;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::template::Message;

pub use live::LiveBackend;
pub use rag::{augment_prompt, parse_example, scan_corpus, Corpus, CorpusError, CorpusExample, RagBackend, RAG_MARKER};
pub use replay::{Fixture, FixtureStore, RecordingBackend, ReplayBackend, FIXTURE_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelParams {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            model: "gpt-4o-mini".into(),
            temperature: 0.2,
            max_tokens: 8192,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendRequest {
    pub messages: Vec<Message>,
    pub params: ModelParams,
}

impl BackendRequest {
    pub fn new(messages: Vec<Message>, params: ModelParams) -> Self {
        debug_assert!(!messages.is_empty());
        BackendRequest { messages, params }
    }

    pub fn digest(&self) -> String {
        request_digest(&self.messages)
    }

    /// Content of the last user message.
    pub fn last_user(&self) -> Option<&str> {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == crate::template::Role::User)
            .map(|m| m.content.as_str())
    }
}

/// Digest of a message list. Model parameters are not included.
pub fn request_digest(messages: &[Message]) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(messages).expect("messages serialize"));
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("provider returned status {status}: {body}")]
    Provider { status: u16, body: String },
    #[error("malformed provider response: {0}")]
    Response(String),
    #[error("no fixture for request {digest}; nearest recorded: {}", if nearest.is_empty() { "none".to_string() } else { nearest.join(", ") })]
    FixtureMissing { digest: String, nearest: Vec<String> },
    #[error("backend configuration error: {0}")]
    Config(String),
    #[error("fixture I/O error: {0}")]
    Io(String),
}

pub trait Backend: Send + Sync {
    fn complete(&self, request: &BackendRequest) -> Result<String, BackendError>;
}

impl<B: Backend + ?Sized> Backend for Arc<B> {
    fn complete(&self, request: &BackendRequest) -> Result<String, BackendError> {
        (**self).complete(request)
    }
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn complete(&self, request: &BackendRequest) -> Result<String, BackendError> {
        (**self).complete(request)
    }
}

type Script = dyn Fn(&BackendRequest, usize) -> Result<String, BackendError> + Send + Sync;

/// Backend driven by a closure that also receives the 0-based call number.
pub struct FnBackend {
    f: Box<Script>,
    calls: AtomicUsize,
}

impl FnBackend {
    pub fn new(f: impl Fn(&BackendRequest, usize) -> Result<String, BackendError> + Send + Sync + 'static) -> Self {
        FnBackend { f: Box::new(f), calls: AtomicUsize::new(0) }
    }

    /// Returns the answers in order, then fails.
    pub fn scripted<S: Into<String>>(answers: impl IntoIterator<Item = S>) -> Self {
        let answers: Vec<String> = answers.into_iter().map(Into::into).collect();
        Self::new(move |_, i| {
            answers
                .get(i)
                .cloned()
                .ok_or_else(|| BackendError::Config(format!("script exhausted after {} answers", answers.len())))
        })
    }
}

impl Backend for FnBackend {
    fn complete(&self, request: &BackendRequest) -> Result<String, BackendError> {
        let i = self.calls.fetch_add(1, Ordering::SeqCst);
        (self.f)(request, i)
    }
}

/// One observed call.
#[derive(Debug, Clone)]
pub struct Call {
    pub request: BackendRequest,
    pub answer: Result<String, BackendError>,
}

/// Forwards to an inner backend and keeps every request and answer.
pub struct InstrumentedBackend {
    inner: Arc<dyn Backend>,
    calls: Mutex<Vec<Call>>,
}

impl InstrumentedBackend {
    pub fn new(inner: Arc<dyn Backend>) -> Self {
        InstrumentedBackend { inner, calls: Mutex::new(Vec::new()) }
    }

    pub fn calls(&self) -> Vec<Call> {
        self.calls.lock().unwrap().clone()
    }

    pub fn call_count(&self) -> usize {
        self.calls.lock().unwrap().len()
    }

    /// Every outbound message content, in call order.
    pub fn outbound(&self) -> Vec<String> {
        self.calls
            .lock()
            .unwrap()
            .iter()
            .flat_map(|c| c.request.messages.iter().map(|m| m.content.clone()))
            .collect()
    }

    pub fn reset(&self) {
        self.calls.lock().unwrap().clear();
    }
}

impl Backend for InstrumentedBackend {
    fn complete(&self, request: &BackendRequest) -> Result<String, BackendError> {
        let answer = self.inner.complete(request);
        self.calls.lock().unwrap().push(Call { request: request.clone(), answer: answer.clone() });
        answer
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_ignores_params() {
        let m = vec![Message::user("hi")];
        let a = BackendRequest::new(m.clone(), ModelParams::default());
        let b = BackendRequest::new(m, ModelParams { temperature: 1.0, ..ModelParams::default() });
        assert_eq!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }

    #[test]
    fn scripted_backend_runs_out() {
        let b = FnBackend::scripted(["a"]);
        let r = BackendRequest::new(vec![Message::user("x")], ModelParams::default());
        assert_eq!(b.complete(&r).unwrap(), "a");
        assert!(b.complete(&r).is_err());
    }
}
