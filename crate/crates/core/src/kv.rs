//! Flat `key = value` documents with `[section]` headers.
//!
//! Used for run configuration and for the metadata sidecars written next to
//! every spectrum. Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub struct KvError {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for KvError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for KvError {}

#[derive(Debug, Clone, PartialEq)]
pub struct KvEntry {
    pub section: String,
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvDocument {
    entries: Vec<KvEntry>,
}

impl KvDocument {
    pub fn parse(text: &str) -> Result<Self, KvError> {
        let mut section = String::new();
        let mut entries: Vec<KvEntry> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| KvError {
                    line: line_no,
                    message: format!("unterminated section header `{line}`"),
                })?;
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| KvError {
                line: line_no,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = k.trim();
            if key.is_empty() {
                return Err(KvError {
                    line: line_no,
                    message: "empty key".into(),
                });
            }
            if entries.iter().any(|e| e.section == section && e.key == key) {
                return Err(KvError {
                    line: line_no,
                    message: format!("duplicate key `{key}` in [{section}]"),
                });
            }
            entries.push(KvEntry {
                section: section.clone(),
                key: key.to_string(),
                value: v.trim().to_string(),
                line: line_no,
            });
        }
        Ok(KvDocument { entries })
    }

    pub fn entries(&self) -> &[KvEntry] {
        &self.entries
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|e| e.section == section && e.key == key)
            .map(|e| e.value.as_str())
    }

    pub fn push(&mut self, section: &str, key: &str, value: impl ToString) {
        self.entries.push(KvEntry {
            section: section.to_string(),
            key: key.to_string(),
            value: value.to_string(),
            line: 0,
        });
    }

    /// Renders grouped by section in first-appearance order.
    pub fn render(&self) -> String {
        let mut sections: Vec<&str> = Vec::new();
        for e in &self.entries {
            if !sections.contains(&e.section.as_str()) {
                sections.push(&e.section);
            }
        }
        let mut out = String::new();
        for (i, s) in sections.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            if !s.is_empty() {
                let _ = writeln!(out, "[{s}]");
            }
            for e in self.entries.iter().filter(|e| e.section == *s) {
                let _ = writeln!(out, "{} = {}", e.key, e.value);
            }
        }
        out
    }
}
