//! A small interpreter for the subset of Python that generated data-frame
//! code uses, with native stand-ins for the geospatial libraries.
//!
//! Every run starts from a fresh interpreter. Imports are checked against a
//! [`Policy`] and file writes go through a [`FileSink`].

mod ast;
mod builtins;
mod exception;
mod interp;
mod lexer;
mod libs;
mod output;
mod parser;
mod policy;
mod value;

use std::rc::Rc;

use geoframe::Frame;

pub use exception::{Exception, PyResult, ISOLATION_ERROR};
pub use libs::folium::Element as MapElement;
pub use libs::plot::{AxesState, FigureState};
pub use output::{Output, SeriesOutput};
pub use policy::{check_relative, DirSink, FileSink, MemorySink, Policy, STDLIB_WHITELIST};

use ast::{ParamKind, StmtKind};
use interp::Interp;
use value::{Args, Scope, Value};

/// Signature of a top-level function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionSig {
    pub name: String,
    pub params: Vec<String>,
    /// Parameters without defaults.
    pub required: usize,
    pub varargs: bool,
}

/// Top-level functions defined in `source`, in definition order.
pub fn functions(source: &str) -> PyResult<Vec<FunctionSig>> {
    let body = parser::parse_module(source)?;
    Ok(body
        .iter()
        .filter_map(|s| match &s.kind {
            StmtKind::FunctionDef(def) => Some(FunctionSig {
                name: def.name.clone(),
                params: def
                    .params
                    .iter()
                    .filter(|p| p.kind == ParamKind::Normal)
                    .map(|p| p.name.clone())
                    .collect(),
                required: def
                    .params
                    .iter()
                    .filter(|p| p.kind == ParamKind::Normal && p.default.is_none())
                    .count(),
                varargs: def.params.iter().any(|p| p.kind == ParamKind::VarArgs),
            }),
            _ => None,
        })
        .collect())
}

/// Kind of a top-level statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopLevelKind {
    Import,
    Function(String),
    Other,
}

/// A top-level statement and the 1-based line it starts on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopLevel {
    pub kind: TopLevelKind,
    pub line: usize,
}

/// Top-level statements of `source`, in order.
pub fn top_level(source: &str) -> PyResult<Vec<TopLevel>> {
    let body = parser::parse_module(source)?;
    Ok(body
        .iter()
        .map(|s| TopLevel {
            kind: match &s.kind {
                StmtKind::Import(_) | StmtKind::ImportFrom(..) => TopLevelKind::Import,
                StmtKind::FunctionDef(def) => TopLevelKind::Function(def.name.clone()),
                _ => TopLevelKind::Other,
            },
            line: s.line,
        })
        .collect())
}

/// Checks that `source` parses.
pub fn check_syntax(source: &str) -> PyResult<()> {
    parser::parse_module(source).map(|_| ())
}

/// Module names importable by `import`, before policy checks.
pub fn known_modules() -> &'static [&'static str] {
    libs::MODULES
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub value: Output,
    pub stdout: String,
    pub written: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunFailure {
    pub exception: Exception,
    pub stdout: String,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.exception)
    }
}

impl std::error::Error for RunFailure {}

/// Executes the module `source`, then calls `function` with `inputs` as
/// positional data-frame arguments. Input frames are copied, so callers'
/// frames are never modified.
pub fn run(
    source: &str,
    function: &str,
    inputs: &[Frame],
    policy: Policy,
    sink: Rc<dyn FileSink>,
) -> Result<RunOutput, RunFailure> {
    let mut it = Interp::new(policy, sink.clone());
    let result = run_in(&mut it, source, function, inputs);
    let stdout = std::mem::take(&mut it.stdout);
    match result {
        Ok(v) => Ok(RunOutput {
            value: Output::from_value(&v),
            stdout,
            written: sink.written(),
        }),
        Err(exception) => Err(RunFailure { exception, stdout }),
    }
}

fn run_in(it: &mut Interp, source: &str, function: &str, inputs: &[Frame]) -> PyResult<Value> {
    let body = parser::parse_module(source)?;
    let scope = Scope::root();
    it.exec_module(&body, &scope)?;
    let f = scope
        .lookup(function)
        .ok_or_else(|| Exception::name_error(function))?;
    if !matches!(f, Value::Function(_)) {
        return Err(Exception::type_error(format!("'{function}' is not a function")));
    }
    let args = inputs.iter().map(|fr| Value::frame(fr.clone())).collect();
    it.call(&f, Args::new(args))
}

#[cfg(test)]
mod tests;
