//! Tokenizer with Python's indentation rules.

use crate::exception::{Exception, PyResult};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Name(String),
    Int(i64),
    Float(f64),
    Str(String),
    /// Body of an f-string with escapes already processed.
    FStr(String),
    Op(&'static str),
    Newline,
    Indent,
    Dedent,
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
}

const OPERATORS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "...", "**", "//", "==", "!=", "<=", ">=", "->", "+=", "-=", "*=",
    "/=", "%=", "&=", "|=", "^=", ":=", "<<", ">>", "+", "-", "*", "/", "%", "&", "|", "^", "~",
    "<", ">", "(", ")", "[", "]", "{", "}", ",", ":", ".", ";", "=", "@",
];

struct Lexer<'a> {
    src: &'a [u8],
    text: &'a str,
    pos: usize,
    line: usize,
    depth: usize,
    indents: Vec<usize>,
    out: Vec<Token>,
    at_line_start: bool,
}

pub fn tokenize(source: &str) -> PyResult<Vec<Token>> {
    let mut lx = Lexer {
        src: source.as_bytes(),
        text: source,
        pos: 0,
        line: 1,
        depth: 0,
        indents: vec![0],
        out: Vec::new(),
        at_line_start: true,
    };
    lx.run()?;
    Ok(lx.out)
}

impl<'a> Lexer<'a> {
    fn peek(&self, off: usize) -> Option<u8> {
        self.src.get(self.pos + off).copied()
    }

    fn push(&mut self, tok: Tok) {
        self.out.push(Token { tok, line: self.line });
    }

    fn run(&mut self) -> PyResult<()> {
        while self.pos < self.src.len() {
            if self.at_line_start && self.depth == 0 {
                self.indentation()?;
                if self.pos >= self.src.len() {
                    break;
                }
            }
            let c = self.src[self.pos];
            match c {
                b'\n' => {
                    self.pos += 1;
                    if self.depth == 0 {
                        self.push(Tok::Newline);
                        self.at_line_start = true;
                    }
                    self.line += 1;
                }
                b' ' | b'\t' | b'\r' | b'\x0c' => self.pos += 1,
                b'#' => {
                    while self.pos < self.src.len() && self.src[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b'\\' if self.peek(1) == Some(b'\n') => {
                    self.pos += 2;
                    self.line += 1;
                }
                b'\\' if self.peek(1) == Some(b'\r') && self.peek(2) == Some(b'\n') => {
                    self.pos += 3;
                    self.line += 1;
                }
                b'0'..=b'9' => self.number()?,
                b'.' if self.peek(1).is_some_and(|d| d.is_ascii_digit()) => self.number()?,
                b'"' | b'\'' => self.string(String::new())?,
                c if c == b'_' || c.is_ascii_alphabetic() || c >= 0x80 => self.name_or_prefixed_string()?,
                _ => self.operator()?,
            }
        }
        if !matches!(self.out.last().map(|t| &t.tok), None | Some(Tok::Newline)) {
            self.push(Tok::Newline);
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.push(Tok::Dedent);
        }
        self.push(Tok::Eof);
        Ok(())
    }

    /// Measures the indentation of a logical line and emits INDENT/DEDENT.
    /// Blank and comment-only lines are skipped entirely.
    fn indentation(&mut self) -> PyResult<()> {
        loop {
            let mut width = 0usize;
            while let Some(c) = self.peek(0) {
                match c {
                    b' ' => width += 1,
                    b'\t' => width = (width / 8 + 1) * 8,
                    b'\x0c' | b'\r' => {}
                    _ => break,
                }
                self.pos += 1;
            }
            match self.peek(0) {
                None => return Ok(()),
                Some(b'\n') => {
                    self.pos += 1;
                    self.line += 1;
                    continue;
                }
                Some(b'#') => {
                    while self.peek(0).is_some_and(|c| c != b'\n') {
                        self.pos += 1;
                    }
                    continue;
                }
                Some(_) => {}
            }
            self.at_line_start = false;
            let current = *self.indents.last().unwrap();
            if width > current {
                self.indents.push(width);
                self.push(Tok::Indent);
            } else {
                while width < *self.indents.last().unwrap() {
                    self.indents.pop();
                    self.push(Tok::Dedent);
                }
                if width != *self.indents.last().unwrap() {
                    return Err(Exception::new(
                        "IndentationError",
                        "unindent does not match any outer indentation level",
                    )
                    .at_line(self.line));
                }
            }
            return Ok(());
        }
    }

    fn number(&mut self) -> PyResult<()> {
        let start = self.pos;
        if self.peek(0) == Some(b'0') && matches!(self.peek(1), Some(b'x' | b'X' | b'o' | b'O' | b'b' | b'B')) {
            let radix = match self.src[self.pos + 1] {
                b'x' | b'X' => 16,
                b'o' | b'O' => 8,
                _ => 2,
            };
            self.pos += 2;
            while self.peek(0).is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_') {
                self.pos += 1;
            }
            let digits: String = self.text[start + 2..self.pos].chars().filter(|c| *c != '_').collect();
            let v = i64::from_str_radix(&digits, radix)
                .map_err(|_| Exception::syntax(self.line, "invalid integer literal"))?;
            self.push(Tok::Int(v));
            return Ok(());
        }
        let mut is_float = false;
        while let Some(c) = self.peek(0) {
            if c.is_ascii_digit() || c == b'_' {
                self.pos += 1;
            } else if c == b'.' && !is_float {
                is_float = true;
                self.pos += 1;
            } else if (c == b'e' || c == b'E')
                && (self.peek(1).is_some_and(|d| d.is_ascii_digit())
                    || (matches!(self.peek(1), Some(b'+' | b'-')) && self.peek(2).is_some_and(|d| d.is_ascii_digit())))
            {
                is_float = true;
                self.pos += 2;
            } else {
                break;
            }
        }
        if self.peek(0).is_some_and(|c| c == b'j' || c == b'J') {
            return Err(Exception::syntax(self.line, "complex literals are not supported"));
        }
        let digits: String = self.text[start..self.pos].chars().filter(|c| *c != '_').collect();
        if is_float {
            let v = digits
                .parse::<f64>()
                .map_err(|_| Exception::syntax(self.line, "invalid float literal"))?;
            self.push(Tok::Float(v));
        } else {
            match digits.parse::<i64>() {
                Ok(v) => self.push(Tok::Int(v)),
                Err(_) => self.push(Tok::Float(digits.parse::<f64>().unwrap_or(f64::INFINITY))),
            }
        }
        Ok(())
    }

    fn name_or_prefixed_string(&mut self) -> PyResult<()> {
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            if c == b'_' || c.is_ascii_alphanumeric() || c >= 0x80 {
                self.pos += 1;
            } else {
                break;
            }
        }
        let word = &self.text[start..self.pos];
        if matches!(self.peek(0), Some(b'"' | b'\'')) {
            let lower = word.to_ascii_lowercase();
            if ["r", "f", "b", "u", "rb", "br", "fr", "rf"].contains(&lower.as_str()) {
                return self.string(lower);
            }
        }
        self.push(Tok::Name(word.to_string()));
        Ok(())
    }

    fn string(&mut self, prefix: String) -> PyResult<()> {
        let raw = prefix.contains('r');
        let fmt = prefix.contains('f');
        let quote = self.src[self.pos];
        let triple = self.peek(1) == Some(quote) && self.peek(2) == Some(quote);
        let start_line = self.line;
        self.pos += if triple { 3 } else { 1 };
        let mut out = String::new();
        loop {
            let Some(c) = self.peek(0) else {
                return Err(Exception::syntax(start_line, "unterminated string literal"));
            };
            if c == quote {
                if !triple {
                    self.pos += 1;
                    break;
                }
                if self.peek(1) == Some(quote) && self.peek(2) == Some(quote) {
                    self.pos += 3;
                    break;
                }
            }
            if c == b'\n' {
                if !triple {
                    return Err(Exception::syntax(start_line, "unterminated string literal"));
                }
                self.line += 1;
            }
            if c == b'\\' && self.pos + 1 < self.src.len() {
                let next = self.src[self.pos + 1];
                if raw {
                    out.push('\\');
                    out.push(next as char);
                    if next == b'\n' {
                        self.line += 1;
                    }
                    self.pos += 2;
                    continue;
                }
                self.pos += 2;
                match next {
                    b'n' => out.push('\n'),
                    b't' => out.push('\t'),
                    b'r' => out.push('\r'),
                    b'0' => out.push('\0'),
                    b'\\' => out.push('\\'),
                    b'\'' => out.push('\''),
                    b'"' => out.push('"'),
                    b'\n' => self.line += 1,
                    b'x' => {
                        let hex = self.text.get(self.pos..self.pos + 2).unwrap_or("");
                        let v = u32::from_str_radix(hex, 16)
                            .map_err(|_| Exception::syntax(self.line, "invalid \\x escape"))?;
                        out.push(char::from_u32(v).unwrap_or('\u{fffd}'));
                        self.pos += 2;
                    }
                    b'u' => {
                        let hex = self.text.get(self.pos..self.pos + 4).unwrap_or("");
                        let v = u32::from_str_radix(hex, 16)
                            .map_err(|_| Exception::syntax(self.line, "invalid \\u escape"))?;
                        out.push(char::from_u32(v).unwrap_or('\u{fffd}'));
                        self.pos += 4;
                    }
                    _ => {
                        // unknown escapes are kept verbatim
                        out.push('\\');
                        self.pos -= 1;
                    }
                }
                continue;
            }
            // copy one UTF-8 scalar
            let ch = self.text[self.pos..].chars().next().unwrap();
            out.push(ch);
            self.pos += ch.len_utf8();
        }
        let tok = if fmt { Tok::FStr(out) } else { Tok::Str(out) };
        self.out.push(Token { tok, line: start_line });
        Ok(())
    }

    fn operator(&mut self) -> PyResult<()> {
        let rest = &self.text[self.pos..];
        for op in OPERATORS {
            if rest.starts_with(op) {
                match *op {
                    "(" | "[" | "{" => self.depth += 1,
                    ")" | "]" | "}" => self.depth = self.depth.saturating_sub(1),
                    _ => {}
                }
                self.pos += op.len();
                self.push(Tok::Op(op));
                return Ok(());
            }
        }
        let ch = rest.chars().next().unwrap_or('?');
        Err(Exception::syntax(self.line, format!("invalid character '{ch}'")))
    }
}
