//! Example corpus, lexical retrieval and the retrieval-augmented backend.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::{Backend, BackendError, BackendRequest};
use crate::template::{Message, Role};

/// First line of the system message carrying retrieved examples.
pub const RAG_MARKER: &str = "Reference examples from the example corpus:";

const STOPWORDS: &[&str] = &[
    "a", "about", "all", "an", "and", "are", "as", "at", "be", "by", "can", "do", "does", "each", "for", "from", "has",
    "have", "how", "i", "if", "in", "into", "is", "it", "its", "me", "my", "of", "on", "one", "or", "so", "that",
    "the", "their", "them", "then", "there", "these", "this", "to", "use", "using", "was", "we", "what", "when",
    "which", "while", "who", "will", "with", "you", "your",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusExample {
    pub id: String,
    pub task: String,
    pub tags: Vec<String>,
    pub code: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CorpusError {
    #[error("{file}: {reason}")]
    Malformed { file: String, reason: String },
    #[error("duplicate example id '{0}'")]
    DuplicateId(String),
    #[error("corpus is not indexed")]
    NotIndexed,
    #[error("cannot read corpus directory {path}: {reason}")]
    Io { path: String, reason: String },
}

/// Parses one example file: a `---` delimited header with `id`, `task`
/// and optional comma-separated `tags`, followed by the code.
pub fn parse_example(name: &str, text: &str) -> Result<CorpusExample, CorpusError> {
    let bad = |reason: &str| CorpusError::Malformed { file: name.to_string(), reason: reason.to_string() };
    let mut lines = text.lines();
    if lines.next().map(str::trim_end) != Some("---") {
        return Err(bad("missing opening '---'"));
    }
    let mut fields = BTreeMap::new();
    let mut closed = false;
    for line in lines.by_ref() {
        let line = line.trim_end();
        if line == "---" {
            closed = true;
            break;
        }
        if line.trim().is_empty() {
            continue;
        }
        let (k, v) = line.split_once(':').ok_or_else(|| bad(&format!("header line without ':': {line}")))?;
        let k = k.trim();
        if !matches!(k, "id" | "task" | "tags") {
            return Err(bad(&format!("unknown header field '{k}'")));
        }
        if fields.insert(k.to_string(), v.trim().to_string()).is_some() {
            return Err(bad(&format!("repeated header field '{k}'")));
        }
    }
    if !closed {
        return Err(bad("missing closing '---'"));
    }
    let code: Vec<&str> = lines.collect();
    let code = code.join("\n").trim_matches('\n').to_string();
    let id = fields.remove("id").filter(|s| !s.is_empty()).ok_or_else(|| bad("missing 'id'"))?;
    let task = fields.remove("task").filter(|s| !s.is_empty()).ok_or_else(|| bad("missing 'task'"))?;
    if code.trim().is_empty() {
        return Err(bad("empty code body"));
    }
    let tags = fields
        .remove("tags")
        .map(|t| t.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
        .unwrap_or_default();
    Ok(CorpusExample { id, task, tags, code })
}

/// Reads every `*.example` file in `dir`, sorted by file name. Returns the
/// valid examples and the errors for malformed files.
pub fn scan_corpus(dir: &Path) -> Result<(Vec<CorpusExample>, Vec<CorpusError>), CorpusError> {
    let io = |e: std::io::Error| CorpusError::Io { path: dir.display().to_string(), reason: e.to_string() };
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "example") && p.is_file())
        .collect();
    paths.sort();
    let mut ok = Vec::new();
    let mut bad = Vec::new();
    for p in paths {
        let name = p.file_name().unwrap().to_string_lossy().into_owned();
        match fs::read_to_string(&p) {
            Ok(text) => match parse_example(&name, &text) {
                Ok(e) => ok.push(e),
                Err(e) => bad.push(e),
            },
            Err(e) => bad.push(CorpusError::Malformed { file: name, reason: e.to_string() }),
        }
    }
    Ok((ok, bad))
}

fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .filter(|t| !STOPWORDS.contains(&t.as_str()))
        .collect()
}

/// Term frequencies divided by the token count.
fn tf(text: &str) -> BTreeMap<String, f64> {
    let toks = tokens(text);
    let n = toks.len() as f64;
    let mut out = BTreeMap::new();
    for t in toks {
        *out.entry(t).or_insert(0.0) += 1.0 / n;
    }
    out
}

fn cosine(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let dot: f64 = a.iter().filter_map(|(t, x)| b.get(t).map(|y| x * y)).sum();
    let na = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    examples: Vec<CorpusExample>,
    index: Option<Vec<BTreeMap<String, f64>>>,
}

impl Corpus {
    /// An unindexed corpus. Ids must be unique.
    pub fn new(examples: Vec<CorpusExample>) -> Result<Self, CorpusError> {
        let mut seen = BTreeSet::new();
        for e in &examples {
            if !seen.insert(e.id.as_str()) {
                return Err(CorpusError::DuplicateId(e.id.clone()));
            }
        }
        Ok(Corpus { examples, index: None })
    }

    /// Loads and indexes a directory; any malformed file is an error.
    pub fn load_dir(dir: &Path) -> Result<Self, CorpusError> {
        let (ok, mut bad) = scan_corpus(dir)?;
        if !bad.is_empty() {
            return Err(bad.remove(0));
        }
        let mut c = Corpus::new(ok)?;
        c.build_index();
        Ok(c)
    }

    pub fn build_index(&mut self) {
        self.index = Some(self.examples.iter().map(|e| tf(&Self::document(e))).collect());
    }

    pub fn is_indexed(&self) -> bool {
        self.index.is_some()
    }

    pub fn examples(&self) -> &[CorpusExample] {
        &self.examples
    }

    fn document(e: &CorpusExample) -> String {
        format!("{} {}", e.task, e.tags.join(" "))
    }

    /// Similarity of `query` to every example, in corpus order.
    pub fn scores(&self, query: &str) -> Result<Vec<f64>, CorpusError> {
        let index = self.index.as_ref().ok_or(CorpusError::NotIndexed)?;
        let q = tf(query);
        Ok(index.iter().map(|d| cosine(&q, d)).collect())
    }

    /// Top `k` examples by score, ties broken by id.
    pub fn retrieve(&self, query: &str, k: usize) -> Result<Vec<&CorpusExample>, CorpusError> {
        let scores = self.scores(query)?;
        let mut order: Vec<usize> = (0..self.examples.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then_with(|| self.examples[a].id.cmp(&self.examples[b].id)));
        Ok(order.into_iter().take(k).map(|i| &self.examples[i]).collect())
    }
}

/// Places one system message with `examples` right before the final user
/// message, replacing any message inserted earlier.
pub fn augment_prompt(messages: &[Message], examples: &[&CorpusExample]) -> Vec<Message> {
    let mut out: Vec<Message> = messages
        .iter()
        .filter(|m| !(m.role == Role::System && m.content.starts_with(RAG_MARKER)))
        .cloned()
        .collect();
    if examples.is_empty() {
        return out;
    }
    let mut text = String::from(RAG_MARKER);
    for e in examples {
        text.push_str(&format!("\n\n# Example {}: {}\n```python\n{}\n```", e.id, e.task, e.code));
    }
    let at = out.iter().rposition(|m| m.role == Role::User).unwrap_or(out.len());
    out.insert(at, Message::system(text));
    out
}

/// Adds the `k` most similar corpus examples to each request.
pub struct RagBackend {
    inner: Arc<dyn Backend>,
    corpus: Corpus,
    k: usize,
}

impl RagBackend {
    pub fn new(inner: Arc<dyn Backend>, corpus: Corpus, k: usize) -> Result<Self, BackendError> {
        if !corpus.is_indexed() {
            return Err(BackendError::Config(CorpusError::NotIndexed.to_string()));
        }
        Ok(RagBackend { inner, corpus, k })
    }
}

impl Backend for RagBackend {
    fn complete(&self, request: &BackendRequest) -> Result<String, BackendError> {
        let query = request.last_user().unwrap_or_default();
        let examples = self.corpus.retrieve(query, self.k).map_err(|e| BackendError::Config(e.to_string()))?;
        let messages = augment_prompt(&request.messages, &examples);
        self.inner.complete(&BackendRequest::new(messages, request.params.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_parsing() {
        let e = parse_example("a.example", "---\nid: a\ntask: Do it\ntags: x, y\n---\nprint(1)\n").unwrap();
        assert_eq!(e.tags, vec!["x", "y"]);
        assert_eq!(e.code, "print(1)");
        assert!(parse_example("b", "id: a\n").is_err());
        assert!(parse_example("b", "---\nid: a\ntask: t\n---\n\n").is_err());
        assert!(parse_example("b", "---\nid: a\ntask: t\ncolour: red\n---\nx\n").is_err());
    }

    #[test]
    fn stopwords_are_dropped() {
        assert_eq!(tokens("Plot the roads, with a Legend"), vec!["plot", "roads", "legend"]);
    }
}
