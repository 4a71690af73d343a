//! Return-type resolution, prompt compilation and the generate/validate
//! retry loop.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::LazyLock;

use regex::Regex;

use crate::backend::{Backend, BackendError, BackendRequest, ModelParams};
use crate::cache::{CacheEntry, CacheKey, CacheStore};
use crate::sandbox::{RunKind, Sandbox, SandboxError, ValidationFrames};
use crate::template::{Message, TemplateError, TemplateSet};

/// Total attempts per generation, the first one included.
pub const MAX_ATTEMPTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PromptKind {
    Chat,
    Improve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationContext {
    pub kind: PromptKind,
    pub utd: String,
    /// Earlier (query, code) pairs of the conversation.
    pub history: Vec<(String, String)>,
    pub toolset: BTreeSet<String>,
    pub return_types: BTreeSet<String>,
    pub query: String,
    pub resolved_type: Option<String>,
    pub linked_count: usize,
}

impl GenerationContext {
    pub fn arity(&self) -> usize {
        1 + self.linked_count
    }

    /// Text used to pick the return type. For an improve step this is
    /// every query of the conversation, oldest first.
    pub fn type_query(&self) -> String {
        match self.kind {
            PromptKind::Chat => self.query.clone(),
            PromptKind::Improve => {
                let mut parts: Vec<&str> = self.history.iter().map(|(q, _)| q.as_str()).collect();
                parts.push(&self.query);
                parts.join("\n")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedCode {
    pub source: String,
    pub entry_arity: usize,
}

/// `def execute(df_1, ..., df_n)`.
pub fn signature(arity: usize) -> String {
    let params: Vec<String> = (1..=arity).map(|i| format!("df_{i}")).collect();
    format!("def execute({})", params.join(", "))
}

/// One round of the retry loop. `error` is `None` for the accepted code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attempt {
    pub code: String,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationExhausted {
    pub last_code: String,
    pub last_error: String,
    pub attempts: Vec<Attempt>,
}

impl fmt::Display for GenerationExhausted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "no valid code after {} attempts; last error: {}\nlast code:\n{}",
            self.attempts.len(),
            self.last_error,
            self.last_code
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExtractError {
    #[error("the answer contains no code defining `def execute(`")]
    NoCode,
    #[error("the answer defines {0} functions named execute; exactly one is required")]
    MultipleEntries(usize),
    #[error("the code does not parse: {0}")]
    Syntax(String),
    #[error("execute takes {found} positional parameters, expected {expected}")]
    Arity { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CodegenError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("could not resolve a return type from the answer {answer:?}")]
    TypeResolution { answer: String },
    #[error("{0}")]
    Exhausted(Box<GenerationExhausted>),
    #[error("no return types permitted")]
    NoReturnTypes,
}

static FENCE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)```[ \t]*[A-Za-z0-9_+-]*[ \t]*\r?\n(.*?)(?:```|\z)").unwrap());
static ENTRY: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?m)^def[ \t]+execute[ \t]*\(").unwrap());
static TYPE_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?m)^[ \t]*TYPE:[ \t]*`?([A-Za-z_][A-Za-z0-9_.]*)`?[ \t]*$").unwrap());

/// Picks the code block defining the entry function and checks its
/// signature.
pub fn extract_code(answer: &str, expected_arity: usize) -> Result<GeneratedCode, ExtractError> {
    let blocks: Vec<&str> = FENCE.captures_iter(answer).map(|c| c.get(1).unwrap().as_str()).collect();
    let source = if blocks.is_empty() {
        if !ENTRY.is_match(answer) {
            return Err(ExtractError::NoCode);
        }
        answer.trim().to_string()
    } else {
        let with_entry: Vec<&str> = blocks.into_iter().filter(|b| ENTRY.is_match(b)).collect();
        match with_entry.len() {
            0 => return Err(ExtractError::NoCode),
            1 => with_entry[0].trim_end().to_string(),
            n => return Err(ExtractError::MultipleEntries(n)),
        }
    };
    let functions = minipy::functions(&source).map_err(|e| ExtractError::Syntax(e.to_string()))?;
    let entries: Vec<_> = functions.iter().filter(|f| f.name == "execute").collect();
    match entries.len() {
        0 => return Err(ExtractError::NoCode),
        1 => {}
        n => return Err(ExtractError::MultipleEntries(n)),
    }
    let found = entries[0].params.len();
    if found != expected_arity || entries[0].varargs {
        return Err(ExtractError::Arity { expected: expected_arity, found });
    }
    Ok(GeneratedCode { source: format!("{source}\n"), entry_arity: found })
}

/// Reads a `TYPE: <identifier>` line. The identifier may also be the last
/// dotted segment of exactly one permitted type.
pub fn parse_type_answer(answer: &str, return_types: &BTreeSet<String>) -> Option<String> {
    for c in TYPE_LINE.captures_iter(answer) {
        let id = &c[1];
        if return_types.contains(id) {
            return Some(id.to_string());
        }
        let by_suffix: Vec<&String> =
            return_types.iter().filter(|r| r.rsplit('.').next().is_some_and(|s| s.eq_ignore_ascii_case(id))).collect();
        if by_suffix.len() == 1 {
            return Some(by_suffix[0].clone());
        }
    }
    None
}

fn list(set: &BTreeSet<String>) -> String {
    set.iter().cloned().collect::<Vec<_>>().join(", ")
}

/// History as shown to the model.
pub fn render_history(history: &[(String, String)]) -> String {
    history
        .iter()
        .enumerate()
        .map(|(i, (q, c))| format!("Prompt {n}: {q}\nCode {n}:\n```python\n{}\n```", c.trim_end(), n = i + 1))
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Fills the chat or improve template.
pub fn compile_prompt(templates: &TemplateSet, ctx: &GenerationContext, resolved: &str) -> Result<Vec<Message>, TemplateError> {
    let mut b = BTreeMap::new();
    b.insert("toolset".to_string(), list(&ctx.toolset));
    b.insert("utd".to_string(), ctx.utd.clone());
    b.insert("signature".to_string(), signature(ctx.arity()));
    b.insert("return_type".to_string(), resolved.to_string());
    b.insert("return_types".to_string(), list(&ctx.return_types));
    b.insert("query".to_string(), ctx.query.clone());
    let template = match ctx.kind {
        PromptKind::Chat => &templates.chat,
        PromptKind::Improve => {
            b.insert("history".to_string(), render_history(&ctx.history));
            &templates.improve
        }
    };
    template.render(&b)
}

/// Outcome of a successful generation.
#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    pub code: GeneratedCode,
    pub return_type: String,
    pub attempts: Vec<Attempt>,
    pub cache_hit: bool,
    /// Set when the accepted code could not be stored.
    pub cache_error: Option<String>,
}

/// Where a generation is cached.
#[derive(Debug, Clone)]
pub struct CacheSlot<'a> {
    pub store: &'a CacheStore,
    pub key: CacheKey,
    pub instance: String,
}

pub struct Generator<'a> {
    pub backend: &'a dyn Backend,
    pub templates: &'a TemplateSet,
    pub params: &'a ModelParams,
    pub sandbox: &'a Sandbox<'a>,
}

impl Generator<'_> {
    fn ask(&self, messages: Vec<Message>) -> Result<String, BackendError> {
        self.backend.complete(&BackendRequest::new(messages, self.params.clone()))
    }

    /// Asks the model which permitted type answers `query`, with one retry
    /// when the answer cannot be parsed.
    pub fn determine_type(&self, query: &str, return_types: &BTreeSet<String>) -> Result<String, CodegenError> {
        let mut b = BTreeMap::new();
        b.insert(
            "return_types".to_string(),
            return_types.iter().map(|r| format!("- {r}")).collect::<Vec<_>>().join("\n"),
        );
        b.insert("query".to_string(), query.to_string());
        let mut messages = self.templates.determine_type.render(&b)?;
        let first = self.ask(messages.clone())?;
        if let Some(t) = parse_type_answer(&first, return_types) {
            return Ok(t);
        }
        messages.push(Message::user(format!(
            "Your answer could not be read. Reply with a single line `TYPE: <identifier>` using one of: {}.",
            list(return_types)
        )));
        let second = self.ask(messages)?;
        parse_type_answer(&second, return_types).ok_or(CodegenError::TypeResolution { answer: second })
    }

    fn resolve_type(&self, ctx: &GenerationContext) -> Result<String, CodegenError> {
        if let Some(t) = &ctx.resolved_type {
            return Ok(t.clone());
        }
        match ctx.return_types.len() {
            0 => Err(CodegenError::NoReturnTypes),
            1 => Ok(ctx.return_types.iter().next().unwrap().clone()),
            _ => self.determine_type(&ctx.type_query(), &ctx.return_types),
        }
    }

    /// Cache lookup, then up to [`MAX_ATTEMPTS`] rounds of asking the
    /// model and validating the answer on `validation`.
    pub fn generate(
        &self,
        ctx: &GenerationContext,
        cache: Option<&CacheSlot>,
        validation: &ValidationFrames,
    ) -> Result<Generation, CodegenError> {
        if let Some(slot) = cache {
            if let Ok(Some(entry)) = slot.store.get(&slot.key) {
                if let Ok(code) = extract_code(&entry.code, ctx.arity()) {
                    return Ok(Generation {
                        code,
                        return_type: entry.return_type,
                        attempts: Vec::new(),
                        cache_hit: true,
                        cache_error: None,
                    });
                }
            }
        }
        let resolved = self.resolve_type(ctx)?;
        let mut conversation = compile_prompt(self.templates, ctx, &resolved)?;
        let mut attempts = Vec::new();
        loop {
            let answer = self.ask(conversation.clone())?;
            let (code, outcome) = match extract_code(&answer, ctx.arity()) {
                Ok(code) => {
                    let run = self.sandbox.run(&code.source, &validation.frames, &resolved, &ctx.toolset, RunKind::Validation);
                    let source = code.source.clone();
                    (source, run.map(|_| code).map_err(|e| describe_failure(&e)))
                }
                Err(e) => (answer.clone(), Err(e.to_string())),
            };
            match outcome {
                Ok(accepted) => {
                    attempts.push(Attempt { code, error: None });
                    let cache_error = cache.and_then(|slot| {
                        let entry = CacheEntry::new(slot.instance.clone(), resolved.clone(), accepted.source.clone());
                        slot.store.set(&slot.key, &entry).err().map(|e| e.to_string())
                    });
                    return Ok(Generation { code: accepted, return_type: resolved, attempts, cache_hit: false, cache_error });
                }
                Err(error) => {
                    attempts.push(Attempt { code: code.clone(), error: Some(error.clone()) });
                    if attempts.len() >= MAX_ATTEMPTS {
                        return Err(CodegenError::Exhausted(Box::new(GenerationExhausted {
                            last_code: code,
                            last_error: error,
                            attempts,
                        })));
                    }
                    let mut b = BTreeMap::new();
                    b.insert("code".to_string(), code.trim_end().to_string());
                    b.insert("error".to_string(), error);
                    b.insert("signature".to_string(), signature(ctx.arity()));
                    b.insert("return_type".to_string(), resolved.clone());
                    conversation.extend(self.templates.retry.render(&b)?);
                }
            }
        }
    }
}

fn describe_failure(e: &SandboxError) -> String {
    match e {
        SandboxError::Execution { traceback, .. } => traceback.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn types(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn fenced_block_is_extracted() {
        let a = "Here you go:\n```python\nimport geopandas\n\ndef execute(df_1, df_2):\n    return df_1\n```\nDone.";
        let code = extract_code(a, 2).unwrap();
        assert!(code.source.starts_with("import geopandas"));
        assert_eq!(code.entry_arity, 2);
    }

    #[test]
    fn prose_and_wrong_arity_are_rejected() {
        assert_eq!(extract_code("I cannot help with that.", 1), Err(ExtractError::NoCode));
        let a = "```python\ndef execute(df_1):\n    return 1\n```";
        assert_eq!(extract_code(a, 2), Err(ExtractError::Arity { expected: 2, found: 1 }));
        let two = "```python\ndef execute(df_1):\n    return 1\n```\n```python\ndef execute(df_1):\n    return 2\n```";
        assert_eq!(extract_code(two, 1), Err(ExtractError::MultipleEntries(2)));
    }

    #[test]
    fn unfenced_code_is_accepted() {
        let code = extract_code("def execute(df_1):\n    return 1\n", 1).unwrap();
        assert_eq!(code.source, "def execute(df_1):\n    return 1\n");
    }

    #[test]
    fn type_answers() {
        let r = types(&["int", "matplotlib.Figure", "folium.Map"]);
        assert_eq!(parse_type_answer("TYPE: int", &r), Some("int".into()));
        assert_eq!(parse_type_answer("Sure.\nTYPE: Figure\n", &r), Some("matplotlib.Figure".into()));
        assert_eq!(parse_type_answer("The type is int", &r), None);
        assert_eq!(parse_type_answer("TYPE: str", &r), None);
    }

    #[test]
    fn signatures() {
        assert_eq!(signature(1), "def execute(df_1)");
        assert_eq!(signature(3), "def execute(df_1, df_2, df_3)");
    }
}
