//! Line-oriented `key: value` block text shared by interface specs,
//! vendor manifests, library manifests and compatibility reports.
//!
//! A document is a sequence of entries. A value is a double-quoted string,
//! a bare token (type tags, booleans, integers) or a `{ ... }` block of
//! further entries. Repeated keys express lists. The canonical rendering
//! uses two-space indentation and LF line endings; an empty block renders
//! as `key: { }`.

use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Str(String),
    Token(String),
    Block(Block),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Block {
    pub entries: Vec<(String, Value)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl Block {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: Value) -> &mut Self {
        self.entries.push((key.into(), value));
        self
    }

    pub fn push_str(&mut self, key: &str, value: impl Into<String>) -> &mut Self {
        self.push(key, Value::Str(value.into()))
    }

    pub fn push_token(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.push(key, Value::Token(value.to_string()))
    }

    pub fn push_block(&mut self, key: &str, block: Block) -> &mut Self {
        self.push(key, Value::Block(block))
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn get_all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a Value> + 'a {
        self.entries
            .iter()
            .filter(move |(k, _)| k == key)
            .map(|(_, v)| v)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _)| k.as_str())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        render_entries(&mut out, &self.entries, 0);
        out
    }
}

impl Value {
    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_token(&self) -> Option<&str> {
        match self {
            Value::Token(t) => Some(t),
            _ => None,
        }
    }

    pub fn as_block(&self) -> Option<&Block> {
        match self {
            Value::Block(b) => Some(b),
            _ => None,
        }
    }
}

fn render_entries(out: &mut String, entries: &[(String, Value)], depth: usize) {
    for (key, value) in entries {
        let indent = "  ".repeat(depth);
        match value {
            Value::Str(s) => {
                let _ = writeln!(out, "{indent}{key}: {}", quote(s));
            }
            Value::Token(t) => {
                let _ = writeln!(out, "{indent}{key}: {t}");
            }
            Value::Block(b) if b.entries.is_empty() => {
                let _ = writeln!(out, "{indent}{key}: {{ }}");
            }
            Value::Block(b) => {
                let _ = writeln!(out, "{indent}{key}: {{");
                render_entries(out, &b.entries, depth + 1);
                let _ = writeln!(out, "{indent}}}");
            }
        }
    }
}

pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Parses a document into its top-level block.
pub fn parse(text: &str) -> Result<Block, SyntaxError> {
    let mut p = Parser {
        chars: text.chars().collect(),
        pos: 0,
        line: 1,
        column: 1,
    };
    let block = p.entries(false)?;
    Ok(block)
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
}

impl Parser {
    fn error(&self, message: impl Into<String>) -> SyntaxError {
        SyntaxError {
            line: self.line,
            column: self.column,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn entries(&mut self, nested: bool) -> Result<Block, SyntaxError> {
        let mut block = Block::new();
        loop {
            self.skip_trivia();
            match self.peek() {
                None if nested => return Err(self.error("unterminated block")),
                None => return Ok(block),
                Some('}') if nested => {
                    self.bump();
                    return Ok(block);
                }
                Some('}') => return Err(self.error("unexpected `}`")),
                Some(_) => {
                    let key = self.word()?;
                    if key.is_empty() {
                        return Err(self.error("expected key"));
                    }
                    self.skip_trivia();
                    if self.bump() != Some(':') {
                        return Err(self.error(format!("expected `:` after `{key}`")));
                    }
                    self.skip_trivia();
                    let value = self.value()?;
                    block.entries.push((key, value));
                }
            }
        }
    }

    fn word(&mut self) -> Result<String, SyntaxError> {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | '+') {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        Ok(s)
    }

    fn value(&mut self) -> Result<Value, SyntaxError> {
        match self.peek() {
            Some('"') => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return Err(self.error("unterminated string")),
                        Some('"') => break,
                        Some('\\') => match self.bump() {
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some('r') => s.push('\r'),
                            _ => return Err(self.error("bad escape")),
                        },
                        Some(c) => s.push(c),
                    }
                }
                Ok(Value::Str(s))
            }
            Some('{') => {
                self.bump();
                Ok(Value::Block(self.entries(true)?))
            }
            _ => {
                let t = self.word()?;
                if t.is_empty() {
                    Err(self.error("expected value"))
                } else {
                    Ok(Value::Token(t))
                }
            }
        }
    }
}
