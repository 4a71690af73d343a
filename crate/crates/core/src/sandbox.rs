//! Runs generated code in the embedded interpreter with an import
//! allow-list, on validation frames or on the real frames.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::rc::Rc;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use geoframe::Frame;
use minipy::{check_relative, DirSink, FileSink, MemorySink, Output, Policy, ISOLATION_ERROR};

use crate::metadata::Descriptor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ValidationMode {
    #[default]
    Excerpt,
    Synthetic,
}

impl ValidationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ValidationMode::Excerpt => "excerpt",
            ValidationMode::Synthetic => "synthetic",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationFrames {
    pub frames: Vec<Frame>,
    pub mode: ValidationMode,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SandboxError {
    #[error("{traceback}")]
    Execution { kind: String, traceback: String },
    #[error("expected a result of type {expected}, got {observed}")]
    TypeMismatch { expected: String, observed: String },
    #[error("{0}")]
    Isolation(String),
    #[error("sandbox configuration error: {0}")]
    Config(String),
}

/// Stand-ins for `frames`: the first rows of each, or synthetic rows from
/// the descriptor's generator.
pub fn make_validation_frames(
    frames: &[&Frame],
    descriptor: &dyn Descriptor,
    mode: ValidationMode,
) -> Result<ValidationFrames, SandboxError> {
    let frames = match mode {
        ValidationMode::Excerpt => {
            let n = descriptor.excerpt_size().max(1);
            frames.iter().map(|f| f.head(n)).collect()
        }
        ValidationMode::Synthetic => frames
            .iter()
            .map(|f| {
                descriptor
                    .synthesize(f)
                    .ok_or_else(|| SandboxError::Config("synthetic validation needs a descriptor with a generator".into()))
            })
            .collect::<Result<_, _>>()?,
    };
    Ok(ValidationFrames { frames, mode })
}

/// Return-type check. Returns the value to hand back, which may be
/// converted (an int where a float is expected, an axes where a figure
/// is expected), or the unchanged value as the error on a mismatch.
pub fn check_kind(expected: &str, value: Output) -> Result<Output, Output> {
    let observed = value.kind();
    if observed == expected {
        return Ok(value);
    }
    match (expected, value) {
        ("float", Output::Int(i)) => Ok(Output::Float(i as f64)),
        ("list", Output::Tuple(items)) => Ok(Output::List(items)),
        ("pandas.DataFrame", v @ Output::Frame(_)) => Ok(v),
        ("pandas.Series", v @ Output::Series(_)) => Ok(v),
        ("matplotlib.Figure", Output::Axes(fig, _)) => Ok(Output::Figure(fig)),
        (_, v) => Err(v),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunKind {
    Validation,
    Real,
}

/// Result of a successful run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionOutput {
    /// Return-type identifier the value was checked against.
    pub kind: String,
    pub value: Output,
    pub stdout: String,
    pub written: Vec<String>,
}

/// Counters shared by every run of an engine.
#[derive(Debug, Default)]
pub struct SandboxStats {
    validation_runs: AtomicUsize,
    real_runs: AtomicUsize,
    last_traceback: Mutex<Option<String>>,
}

impl SandboxStats {
    pub fn validation_runs(&self) -> usize {
        self.validation_runs.load(Ordering::SeqCst)
    }

    pub fn real_runs(&self) -> usize {
        self.real_runs.load(Ordering::SeqCst)
    }

    pub fn last_traceback(&self) -> Option<String> {
        self.last_traceback.lock().unwrap().clone()
    }

    pub fn reset(&self) {
        self.validation_runs.store(0, Ordering::SeqCst);
        self.real_runs.store(0, Ordering::SeqCst);
        *self.last_traceback.lock().unwrap() = None;
    }
}

/// Reads from the working directory, keeps writes in memory.
struct ValidationSink {
    workdir: PathBuf,
    mem: MemorySink,
}

impl FileSink for ValidationSink {
    fn write(&self, path: &str, contents: &[u8]) -> Result<(), String> {
        self.mem.write(path, contents)
    }

    fn read(&self, path: &str) -> Result<Vec<u8>, String> {
        self.mem.read(path).or_else(|_| {
            let rel = check_relative(path)?;
            std::fs::read(self.workdir.join(rel)).map_err(|e| e.to_string())
        })
    }

    fn written(&self) -> Vec<String> {
        self.mem.written()
    }
}

/// One sandbox per generate or execute call; every run starts from a fresh
/// interpreter.
pub struct Sandbox<'a> {
    workdir: &'a Path,
    stats: &'a SandboxStats,
}

impl<'a> Sandbox<'a> {
    pub fn new(workdir: &'a Path, stats: &'a SandboxStats) -> Self {
        Sandbox { workdir, stats }
    }

    pub fn run(
        &self,
        code: &str,
        frames: &[Frame],
        expected_kind: &str,
        toolset: &BTreeSet<String>,
        kind: RunKind,
    ) -> Result<ExecutionOutput, SandboxError> {
        let sink: Rc<dyn FileSink> = match kind {
            RunKind::Validation => {
                self.stats.validation_runs.fetch_add(1, Ordering::SeqCst);
                Rc::new(ValidationSink { workdir: self.workdir.to_path_buf(), mem: MemorySink::new() })
            }
            RunKind::Real => {
                self.stats.real_runs.fetch_add(1, Ordering::SeqCst);
                Rc::new(DirSink::new(self.workdir))
            }
        };
        let result = minipy::run(code, "execute", frames, Policy::with_tools(toolset.iter()), sink);
        let out = match result {
            Ok(out) => out,
            Err(failure) => {
                let tb = failure.exception.traceback();
                *self.stats.last_traceback.lock().unwrap() = Some(tb.clone());
                return Err(if failure.exception.kind == ISOLATION_ERROR {
                    SandboxError::Isolation(tb)
                } else {
                    SandboxError::Execution { kind: failure.exception.kind.clone(), traceback: tb }
                });
            }
        };
        match check_kind(expected_kind, out.value) {
            Ok(value) => Ok(ExecutionOutput {
                kind: expected_kind.to_string(),
                value,
                stdout: out.stdout,
                written: out.written,
            }),
            Err(value) => Err(SandboxError::TypeMismatch { expected: expected_kind.to_string(), observed: value.kind() }),
        }
    }
}

/// Whether chat and improve run the code they produce.
pub fn gate_auto_execute(safe_mode: bool) -> bool {
    !safe_mode
}
