//! Import policy and file output sinks.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Component, Path, PathBuf};

/// Standard-library modules importable regardless of the tool set. Only
/// modules without file, process or network access are listed.
pub const STDLIB_WHITELIST: &[&str] = &["__future__", "json", "math", "typing", "warnings"];

/// Which modules generated code may import, plus evaluation limits.
#[derive(Debug, Clone)]
pub struct Policy {
    pub tools: BTreeSet<String>,
    pub stdlib: BTreeSet<String>,
    pub step_limit: u64,
    pub max_depth: usize,
    /// Source modules supplied by the host, importable by name.
    pub user_modules: BTreeMap<String, String>,
}

impl Default for Policy {
    fn default() -> Self {
        Policy {
            tools: BTreeSet::new(),
            stdlib: STDLIB_WHITELIST.iter().map(|s| s.to_string()).collect(),
            step_limit: 5_000_000,
            max_depth: 200,
            user_modules: BTreeMap::new(),
        }
    }
}

impl Policy {
    pub fn with_tools<I, S>(tools: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Policy {
            tools: tools.into_iter().map(Into::into).collect(),
            ..Policy::default()
        }
    }

    pub fn with_module(mut self, name: impl Into<String>, source: impl Into<String>) -> Self {
        self.user_modules.insert(name.into(), source.into());
        self
    }

    /// Whether a top-level module name may be imported.
    pub fn allows(&self, root: &str) -> bool {
        self.tools.contains(root) || self.stdlib.contains(root) || self.user_modules.contains_key(root)
    }

    pub fn describe(&self) -> String {
        let all: Vec<&str> = self.tools.iter().map(String::as_str).collect();
        if all.is_empty() {
            "none".into()
        } else {
            all.join(", ")
        }
    }
}

/// Destination for files written by generated code.
pub trait FileSink {
    fn write(&self, path: &str, contents: &[u8]) -> Result<(), String>;
    fn read(&self, path: &str) -> Result<Vec<u8>, String>;
    /// Paths written so far, in order.
    fn written(&self) -> Vec<String>;
}

/// Rejects absolute paths and parent-directory components.
pub fn check_relative(path: &str) -> Result<PathBuf, String> {
    let p = Path::new(path);
    if path.is_empty() {
        return Err("empty path".into());
    }
    for c in p.components() {
        match c {
            Component::Normal(_) | Component::CurDir => {}
            _ => return Err(format!("path '{path}' escapes the working directory")),
        }
    }
    Ok(p.to_path_buf())
}

/// Keeps written files in memory; used for validation runs.
#[derive(Default)]
pub struct MemorySink {
    files: RefCell<BTreeMap<String, Vec<u8>>>,
    order: RefCell<Vec<String>>,
    /// Files readable by generated code.
    inputs: BTreeMap<String, Vec<u8>>,
}

impl MemorySink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_inputs(inputs: BTreeMap<String, Vec<u8>>) -> Self {
        MemorySink {
            inputs,
            ..Self::default()
        }
    }

    pub fn get(&self, path: &str) -> Option<Vec<u8>> {
        self.files.borrow().get(path).cloned()
    }
}

impl FileSink for MemorySink {
    fn write(&self, path: &str, contents: &[u8]) -> Result<(), String> {
        check_relative(path)?;
        self.files.borrow_mut().insert(path.to_string(), contents.to_vec());
        self.order.borrow_mut().push(path.to_string());
        Ok(())
    }

    fn read(&self, path: &str) -> Result<Vec<u8>, String> {
        check_relative(path)?;
        self.files
            .borrow()
            .get(path)
            .or_else(|| self.inputs.get(path))
            .cloned()
            .ok_or_else(|| format!("No such file or directory: '{path}'"))
    }

    fn written(&self) -> Vec<String> {
        self.order.borrow().clone()
    }
}

/// Writes below a working directory, creating parent directories.
pub struct DirSink {
    root: PathBuf,
    order: RefCell<Vec<String>>,
}

impl DirSink {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DirSink {
            root: root.into(),
            order: RefCell::new(Vec::new()),
        }
    }
}

impl FileSink for DirSink {
    fn write(&self, path: &str, contents: &[u8]) -> Result<(), String> {
        let rel = check_relative(path)?;
        let full = self.root.join(rel);
        if let Some(parent) = full.parent() {
            fs::create_dir_all(parent).map_err(|e| e.to_string())?;
        }
        fs::write(&full, contents).map_err(|e| e.to_string())?;
        self.order.borrow_mut().push(path.to_string());
        Ok(())
    }

    fn read(&self, path: &str) -> Result<Vec<u8>, String> {
        let rel = check_relative(path)?;
        fs::read(self.root.join(rel)).map_err(|e| e.to_string())
    }

    fn written(&self) -> Vec<String> {
        self.order.borrow().clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policy_allows_tools_and_stdlib_only() {
        let p = Policy::with_tools(["geopandas"]);
        assert!(p.allows("geopandas"));
        assert!(p.allows("math"));
        assert!(!p.allows("os"));
        assert!(!p.allows("folium"));
    }

    #[test]
    fn relative_paths_only() {
        assert!(check_relative("Out/a.gpkg").is_ok());
        assert!(check_relative("/etc/passwd").is_err());
        assert!(check_relative("../x").is_err());
        assert!(check_relative("a/../../x").is_err());
    }

    #[test]
    fn dir_sink_creates_parents() {
        let dir = std::env::temp_dir().join(format!("minipy-sink-{}", std::process::id()));
        let sink = DirSink::new(&dir);
        sink.write("Out/x.txt", b"hi").unwrap();
        assert_eq!(sink.read("Out/x.txt").unwrap(), b"hi");
        assert_eq!(sink.written(), vec!["Out/x.txt".to_string()]);
        fs::remove_dir_all(dir).unwrap();
    }
}
