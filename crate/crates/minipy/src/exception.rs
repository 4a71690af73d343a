use std::fmt;

/// A raised exception, with the frames it unwound through.
#[derive(Debug, Clone, PartialEq)]
pub struct Exception {
    pub kind: String,
    pub message: String,
    /// `(function, line)` pairs, innermost first.
    pub frames: Vec<(String, usize)>,
    pending_line: Option<usize>,
}

/// Kind used when generated code imports something outside the permitted set.
pub const ISOLATION_ERROR: &str = "IsolationError";

impl Exception {
    pub fn new(kind: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            kind: kind.into(),
            message: message.into(),
            frames: Vec::new(),
            pending_line: None,
        }
    }

    pub fn at_line(mut self, line: usize) -> Self {
        self.pending_line = Some(line);
        self
    }

    pub fn type_error(msg: impl Into<String>) -> Self {
        Self::new("TypeError", msg)
    }

    pub fn value_error(msg: impl Into<String>) -> Self {
        Self::new("ValueError", msg)
    }

    pub fn attribute_error(type_name: &str, attr: &str) -> Self {
        Self::new(
            "AttributeError",
            format!("'{type_name}' object has no attribute '{attr}'"),
        )
    }

    pub fn key_error(key: impl fmt::Display) -> Self {
        Self::new("KeyError", key.to_string())
    }

    pub fn index_error(msg: impl Into<String>) -> Self {
        Self::new("IndexError", msg)
    }

    pub fn name_error(name: &str) -> Self {
        Self::new("NameError", format!("name '{name}' is not defined"))
    }

    pub fn syntax(line: usize, msg: impl Into<String>) -> Self {
        Self::new("SyntaxError", msg).at_line(line)
    }

    pub fn is_isolation(&self) -> bool {
        self.kind == ISOLATION_ERROR
    }

    /// Records the innermost failing statement line, once per frame.
    pub(crate) fn note_line(&mut self, line: usize) {
        if self.pending_line.is_none() {
            self.pending_line = Some(line);
        }
    }

    /// Closes the current frame as the exception leaves a function.
    pub(crate) fn push_frame(&mut self, function: &str) {
        let line = self.pending_line.take().unwrap_or(0);
        self.frames.push((function.to_string(), line));
    }

    pub fn line(&self) -> Option<usize> {
        self.frames.first().map(|f| f.1).or(self.pending_line)
    }

    /// Python-style traceback text.
    pub fn traceback(&self) -> String {
        let mut out = String::from("Traceback (most recent call last):\n");
        for (func, line) in self.frames.iter().rev() {
            out.push_str(&format!("  File \"<generated>\", line {line}, in {func}\n"));
        }
        if self.frames.is_empty() {
            if let Some(line) = self.pending_line {
                out.push_str(&format!("  File \"<generated>\", line {line}\n"));
            }
        }
        out.push_str(&self.to_string());
        out
    }
}

impl fmt::Display for Exception {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.message.is_empty() {
            f.write_str(&self.kind)
        } else {
            write!(f, "{}: {}", self.kind, self.message)
        }
    }
}

impl std::error::Error for Exception {}

pub type PyResult<T> = Result<T, Exception>;
