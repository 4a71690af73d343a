//! Writes accepted code into the local `ai` module as a named function.

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use minipy::{TopLevel, TopLevelKind};
use regex::Regex;

pub const MODULE_NAME: &str = "ai";
pub const MODULE_FILE: &str = "ai.py";

const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue", "def", "del",
    "elif", "else", "except", "finally", "for", "from", "global", "if", "import", "in", "is", "lambda", "nonlocal",
    "not", "or", "pass", "raise", "return", "try", "while", "with", "yield",
];

static IDENT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[A-Za-z_][A-Za-z0-9_]*$").unwrap());

#[derive(Debug, thiserror::Error)]
pub enum InjectError {
    #[error("'{0}' is not a valid function name")]
    InvalidName(String),
    #[error("the ai module already defines '{0}'; pass overwrite to replace it")]
    Collision(String),
    #[error("cannot parse {path}: {reason}")]
    Syntax { path: PathBuf, reason: String },
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

pub fn is_valid_name(name: &str) -> bool {
    IDENT.is_match(name) && !KEYWORDS.contains(&name)
}

/// Steps for calling the injected function by hand.
pub fn instructions(name: &str) -> String {
    format!(
        "Manual injection procedure...\n\
         If your file does not import the module yet, add this line at the top:\n\
         import ai\n\
         Then call the function where the generated code used to run:\n\
         ai.{name}(gdf1, gdf2, ...)\n\
         Pass your own data frames in the order they had in the conversation."
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Chunk {
    function: Option<String>,
    text: String,
}

/// Import statements and the remaining top-level blocks of `source`.
fn split(source: &str) -> Result<(Vec<String>, Vec<Chunk>), String> {
    let items: Vec<TopLevel> = minipy::top_level(source).map_err(|e| e.to_string())?;
    let lines: Vec<&str> = source.lines().collect();
    let mut imports = Vec::new();
    let mut chunks = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let start = item.line.saturating_sub(1);
        let end = items.get(i + 1).map_or(lines.len(), |n| n.line.saturating_sub(1));
        let mut block: Vec<&str> = lines[start..end.max(start)].to_vec();
        while block.last().is_some_and(|l| l.trim().is_empty()) {
            block.pop();
        }
        let text = block.join("\n");
        match &item.kind {
            TopLevelKind::Import => imports.push(text),
            TopLevelKind::Function(name) => chunks.push(Chunk { function: Some(name.clone()), text }),
            TopLevelKind::Other => chunks.push(Chunk { function: None, text }),
        }
    }
    Ok((imports, chunks))
}

fn rename_all(text: &str, from: &str, to: &str) -> String {
    let re = Regex::new(&format!(r"(^|[^.\w]){}\b", regex::escape(from))).expect("escaped pattern");
    re.replace_all(text, |c: &regex::Captures| format!("{}{to}", &c[1])).into_owned()
}

/// `code` with its entry function renamed to `name` and every other
/// top-level function prefixed with `name__`.
pub fn rename_entry(code: &str, name: &str) -> Result<String, String> {
    let (_, chunks) = split(code)?;
    let helpers: Vec<String> = chunks
        .iter()
        .filter_map(|c| c.function.clone())
        .filter(|f| f != "execute")
        .collect();
    let mut out = rename_all(code, "execute", name);
    for h in helpers {
        out = rename_all(&out, &h, &format!("{name}__{h}"));
    }
    Ok(out)
}

fn render(imports: &[String], chunks: &[Chunk]) -> String {
    let mut out = String::new();
    if !imports.is_empty() {
        out.push_str(&imports.join("\n"));
        out.push('\n');
    }
    for c in chunks {
        if !out.is_empty() {
            out.push_str("\n\n");
        }
        out.push_str(&c.text);
        out.push('\n');
    }
    out
}

/// Module text after adding `code` as `name` to `existing`.
pub fn merge_module(existing: &str, code: &str, name: &str, overwrite: bool) -> Result<String, InjectError> {
    if !is_valid_name(name) {
        return Err(InjectError::InvalidName(name.to_string()));
    }
    let syntax = |path: &str, reason: String| InjectError::Syntax { path: PathBuf::from(path), reason };
    let (mut imports, mut chunks) = split(existing).map_err(|r| syntax(MODULE_FILE, r))?;
    let owned = |c: &Chunk| c.function.as_deref().is_some_and(|f| f == name || f.starts_with(&format!("{name}__")));
    if chunks.iter().any(|c| c.function.as_deref() == Some(name)) {
        if !overwrite {
            return Err(InjectError::Collision(name.to_string()));
        }
        chunks.retain(|c| !owned(c));
    }
    let renamed = rename_entry(code, name).map_err(|r| syntax("<generated code>", r))?;
    let (new_imports, new_chunks) = split(&renamed).map_err(|r| syntax("<generated code>", r))?;
    let mut seen: BTreeSet<String> = imports.iter().map(|i| i.trim().to_string()).collect();
    for i in new_imports {
        if seen.insert(i.trim().to_string()) {
            imports.push(i);
        }
    }
    chunks.extend(new_chunks);
    Ok(render(&imports, &chunks))
}

/// Adds `code` as `name` to `<dir>/ai.py`, creating the file if needed.
/// The file is left untouched on any error.
pub fn inject_into(dir: &Path, code: &str, name: &str, overwrite: bool) -> Result<PathBuf, InjectError> {
    let path = dir.join(MODULE_FILE);
    let io = |source| InjectError::Io { path: path.clone(), source };
    let existing = match fs::read_to_string(&path) {
        Ok(s) => s,
        Err(e) if e.kind() == io::ErrorKind::NotFound => String::new(),
        Err(e) => return Err(io(e)),
    };
    let text = merge_module(&existing, code, name, overwrite).map_err(|e| match e {
        InjectError::Syntax { path: p, reason } if p == Path::new(MODULE_FILE) => InjectError::Syntax { path: path.clone(), reason },
        other => other,
    })?;
    fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(text.as_bytes()).map_err(io)?;
    tmp.persist(&path).map_err(|e| io(e.error))?;
    Ok(path)
}
