//! JSON message templates with `{{name}}` slots.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Message { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Message { role: Role::User, content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("template is not valid JSON: {0}")]
    Json(String),
    #[error("template schema error{}: {reason}", index.map(|i| format!(" in message {i}")).unwrap_or_default())]
    Schema { index: Option<usize>, reason: String },
    #[error("unbound template slot '{0}'")]
    Unbound(String),
    #[error("cannot read template {path}: {reason}")]
    Io { path: String, reason: String },
}

fn schema(index: Option<usize>, reason: impl Into<String>) -> TemplateError {
    TemplateError::Schema { index, reason: reason.into() }
}

static SLOT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\{\{([A-Za-z_][A-Za-z0-9_]*)\}\}").unwrap());

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub messages: Vec<Message>,
}

impl PromptTemplate {
    /// Parses and validates a template document.
    pub fn parse(raw: &str) -> Result<Self, TemplateError> {
        let doc: Value = serde_json::from_str(raw).map_err(|e| TemplateError::Json(e.to_string()))?;
        let obj = doc.as_object().ok_or_else(|| schema(None, "top level must be an object"))?;
        if let Some(extra) = obj.keys().find(|k| *k != "messages") {
            return Err(schema(None, format!("unknown field '{extra}'")));
        }
        let list = obj
            .get("messages")
            .ok_or_else(|| schema(None, "missing field 'messages'"))?
            .as_array()
            .ok_or_else(|| schema(None, "'messages' must be an array"))?;
        if list.is_empty() {
            return Err(schema(None, "'messages' must contain at least one message"));
        }
        let mut messages = Vec::with_capacity(list.len());
        for (i, m) in list.iter().enumerate() {
            let m = m.as_object().ok_or_else(|| schema(Some(i), "message must be an object"))?;
            if let Some(extra) = m.keys().find(|k| *k != "role" && *k != "content") {
                return Err(schema(Some(i), format!("unknown field '{extra}'")));
            }
            let role = match m.get("role") {
                None => return Err(schema(Some(i), "missing field 'role'")),
                Some(Value::String(r)) if r == "system" => Role::System,
                Some(Value::String(r)) if r == "user" => Role::User,
                Some(other) => return Err(schema(Some(i), format!("invalid role {other}; expected \"system\" or \"user\""))),
            };
            let content = match m.get("content") {
                None => return Err(schema(Some(i), "missing field 'content'")),
                Some(Value::String(c)) => c.clone(),
                Some(_) => return Err(schema(Some(i), "'content' must be a string")),
            };
            check_slots(i, &content)?;
            messages.push(Message { role, content });
        }
        Ok(PromptTemplate { messages })
    }

    pub fn load(path: &Path) -> Result<Self, TemplateError> {
        let raw = std::fs::read_to_string(path).map_err(|e| TemplateError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::parse(&raw)
    }

    pub fn to_json(&self) -> String {
        let messages: Vec<Value> = self
            .messages
            .iter()
            .map(|m| json!({"role": m.role.as_str(), "content": m.content}))
            .collect();
        serde_json::to_string_pretty(&json!({ "messages": messages })).unwrap_or_default()
    }

    /// Slot names in order of first appearance.
    pub fn slots(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for m in &self.messages {
            for c in SLOT.captures_iter(&m.content) {
                if !out.iter().any(|s| s == &c[1]) {
                    out.push(c[1].to_string());
                }
            }
        }
        out
    }

    /// Substitutes every slot in one pass. Bound values are copied verbatim
    /// and never scanned for further slots.
    pub fn render(&self, bindings: &BTreeMap<String, String>) -> Result<Vec<Message>, TemplateError> {
        self.messages
            .iter()
            .map(|m| {
                let mut out = String::with_capacity(m.content.len());
                let mut last = 0;
                for c in SLOT.captures_iter(&m.content) {
                    let whole = c.get(0).unwrap();
                    let value = bindings.get(&c[1]).ok_or_else(|| TemplateError::Unbound(c[1].to_string()))?;
                    out.push_str(&m.content[last..whole.start()]);
                    out.push_str(value);
                    last = whole.end();
                }
                out.push_str(&m.content[last..]);
                Ok(Message { role: m.role, content: out })
            })
            .collect()
    }
}

/// Every `{{` must open a well-formed slot.
fn check_slots(index: usize, content: &str) -> Result<(), TemplateError> {
    let mut rest = content;
    while let Some(pos) = rest.find("{{") {
        let tail = &rest[pos..];
        match SLOT.find(tail) {
            Some(m) if m.start() == 0 => rest = &tail[m.end()..],
            _ => {
                let snippet: String = tail.chars().take(24).collect();
                return Err(schema(Some(index), format!("malformed slot near '{snippet}'")));
            }
        }
    }
    Ok(())
}

/// The four templates used during generation.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    pub chat: PromptTemplate,
    pub improve: PromptTemplate,
    pub determine_type: PromptTemplate,
    pub retry: PromptTemplate,
}

const BUNDLED: [(&str, &str); 4] = [
    ("chat", include_str!("../templates/chat.json")),
    ("improve", include_str!("../templates/improve.json")),
    ("determine_type", include_str!("../templates/determine_type.json")),
    ("retry", include_str!("../templates/retry.json")),
];

impl TemplateSet {
    pub fn bundled() -> Self {
        let get = |name: &str| {
            let raw = BUNDLED.iter().find(|(n, _)| *n == name).unwrap().1;
            PromptTemplate::parse(raw).expect("bundled template")
        };
        TemplateSet {
            chat: get("chat"),
            improve: get("improve"),
            determine_type: get("determine_type"),
            retry: get("retry"),
        }
    }

    /// Bundled templates, each replaced by `<dir>/<name>.json` when present.
    pub fn with_overrides(dir: &Path) -> Result<Self, TemplateError> {
        let mut set = Self::bundled();
        for (name, slot) in [
            ("chat", &mut set.chat),
            ("improve", &mut set.improve),
            ("determine_type", &mut set.determine_type),
            ("retry", &mut set.retry),
        ] {
            let path = dir.join(format!("{name}.json"));
            if path.exists() {
                *slot = PromptTemplate::load(&path)?;
            }
        }
        Ok(set)
    }

    pub fn raw_bundled(name: &str) -> Option<&'static str> {
        BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, raw)| *raw)
    }
}
