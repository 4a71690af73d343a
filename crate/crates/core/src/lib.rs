//! Conversational geospatial data frames. A [`SmartFrame`] pairs a frame
//! with a conversation; each request is turned into a Python function by a
//! model backend, validated on sample rows in an embedded interpreter,
//! cached, and optionally run on the real data.

pub mod backend;
pub mod cache;
pub mod codegen;
pub mod config;
pub mod inject;
pub mod metadata;
pub mod sandbox;
pub mod state;
pub mod template;

pub use geoframe;
pub use minipy;

pub use backend::{Backend, BackendError, BackendRequest, ModelParams};
pub use codegen::{CodegenError, GenerationExhausted};
pub use config::{BackendKind, Config, ConfigError};
pub use inject::InjectError;
pub use metadata::{Descriptor, FrameMetadata, PublicDescriptor, RedactingDescriptor, SyntheticGenerator};
pub use sandbox::{ExecutionOutput, SandboxError};
pub use state::{ChatOptions, Engine, HistoryEntry, InjectReport, Outcome, Reply, SmartFrame};
pub use template::{Message, PromptTemplate, Role, TemplateError, TemplateSet};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot build a smart frame: {0}")]
    Construction(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Generation(#[from] CodegenError),
    #[error("execution failed: {0}")]
    Execution(#[from] SandboxError),
    #[error(transparent)]
    Inject(#[from] InjectError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Template(#[from] TemplateError),
}

impl Error {
    /// The exhausted retry loop, when that is what failed.
    pub fn exhausted(&self) -> Option<&GenerationExhausted> {
        match self {
            Error::Generation(CodegenError::Exhausted(e)) => Some(e),
            _ => None,
        }
    }
}
