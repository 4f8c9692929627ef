//! Sectioned `key = value` text.
//!
//! Lines are blank, comments (`#` or `;` first), `[section]` headers or
//! `key = value` entries. A `#` preceded by whitespace starts a trailing
//! comment. Keys and section names use `[A-Za-z0-9_.-]`. Entries before the
//! first section, duplicate sections and duplicate keys are errors.

use std::str::FromStr;

use crate::error::{CliError, Result};

/// A value with the position of its first character (1-based).
#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
    pub column: usize,
    pub key_column: usize,
}

impl Entry {
    pub fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(CliError::Config { line: self.line, column: self.column, message: message.into() })
    }

    pub fn parse<T: FromStr>(&self, what: &str) -> Result<T> {
        self.value.parse().or_else(|_| self.err(format!("`{}`: expected {what}, got `{}`", self.key, self.value)))
    }

    /// Comma-separated items, each with its own column for errors.
    pub fn items(&self) -> Vec<Entry> {
        let mut out = Vec::new();
        let mut offset = 0;
        for part in self.value.split(',') {
            let lead = part.len() - part.trim_start().len();
            out.push(Entry {
                key: self.key.clone(),
                value: part.trim().to_string(),
                line: self.line,
                column: self.column + offset + lead,
                key_column: self.key_column,
            });
            offset += part.len() + 1;
        }
        out
    }

    pub fn list<T: FromStr>(&self, what: &str) -> Result<Vec<T>> {
        if self.value.is_empty() {
            return Ok(Vec::new());
        }
        self.items().iter().map(|e| e.parse(what)).collect()
    }

    /// Whitespace-separated words, each with its column.
    pub fn words(&self) -> Vec<Entry> {
        let mut out = Vec::new();
        let bytes = self.value.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            if bytes[i].is_ascii_whitespace() {
                i += 1;
                continue;
            }
            let start = i;
            while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            out.push(Entry {
                key: self.key.clone(),
                value: self.value[start..i].to_string(),
                line: self.line,
                column: self.column + start,
                key_column: self.key_column,
            });
        }
        out
    }

    pub fn flag(&self) -> Result<bool> {
        match self.value.as_str() {
            "true" | "yes" | "on" => Ok(true),
            "false" | "no" | "off" => Ok(false),
            _ => self.err(format!("`{}`: expected true or false, got `{}`", self.key, self.value)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn require(&self, key: &str) -> Result<&Entry> {
        self.get(key).ok_or_else(|| CliError::Config {
            line: self.line,
            column: 1,
            message: format!("section [{}] is missing `{key}`", self.name),
        })
    }

    /// Rejects keys outside `allowed`.
    pub fn only(&self, allowed: &[&str]) -> Result<()> {
        match self.entries.iter().find(|e| !allowed.contains(&e.key.as_str())) {
            Some(e) => Err(CliError::Config {
                line: e.line,
                column: e.key_column,
                message: format!("unknown key `{}` in [{}] (allowed: {})", e.key, self.name, allowed.join(", ")),
            }),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Ini {
    pub sections: Vec<Section>,
}

impl Ini {
    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn require(&self, name: &str) -> Result<&Section> {
        self.section(name)
            .ok_or_else(|| CliError::Config { line: 1, column: 1, message: format!("missing section [{name}]") })
    }
}

fn valid_name(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_alphanumeric() || b"_.-".contains(&b))
}

fn strip_comment(s: &str) -> &str {
    let b = s.as_bytes();
    for i in 0..b.len() {
        if b[i] == b'#' && (i == 0 || b[i - 1].is_ascii_whitespace()) {
            return &s[..i];
        }
    }
    s
}

pub fn parse(src: &str) -> Result<Ini> {
    let mut ini = Ini::default();
    for (n, raw) in src.lines().enumerate() {
        let line = n + 1;
        let err = |column: usize, message: String| Err(CliError::Config { line, column, message });
        let indent = raw.len() - raw.trim_start().len();
        let body = strip_comment(raw).trim_end();
        let text = body.trim_start();
        if text.is_empty() || text.starts_with(';') {
            continue;
        }
        if let Some(rest) = text.strip_prefix('[') {
            let Some(close) = rest.find(']') else {
                return err(indent + 1, "section header without `]`".into());
            };
            let tail = &rest[close + 1..];
            if !tail.trim().is_empty() {
                let lead = tail.len() - tail.trim_start().len();
                return err(indent + close + 3 + lead, "text after section header".into());
            }
            let name = rest[..close].trim();
            if !valid_name(name) {
                return err(indent + 2, format!("bad section name `{name}`"));
            }
            if ini.section(name).is_some() {
                return err(indent + 2, format!("section [{name}] appears twice"));
            }
            ini.sections.push(Section { name: name.into(), line, entries: Vec::new() });
            continue;
        }
        let Some(eq) = text.find('=') else {
            return err(indent + 1, "expected `key = value` or `[section]`".into());
        };
        let key = text[..eq].trim_end();
        if !valid_name(key) {
            return err(indent + 1, format!("bad key `{key}`"));
        }
        let after = &text[eq + 1..];
        let value = after.trim();
        let column = indent + eq + 2 + (after.len() - after.trim_start().len());
        let Some(section) = ini.sections.last_mut() else {
            return err(indent + 1, format!("`{key}` appears before any [section]"));
        };
        if section.get(key).is_some() {
            return err(indent + 1, format!("`{key}` set twice in [{}]", section.name));
        }
        section.entries.push(Entry { key: key.into(), value: value.into(), line, column, key_column: indent + 1 });
    }
    Ok(ini)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pos(r: Result<Ini>) -> (usize, usize) {
        match r {
            Err(CliError::Config { line, column, .. }) => (line, column),
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn entries_and_comments() {
        let ini = parse("# top\n[grid]\nh = 0.04, 0.02  # trailing\n  lambda=0.5\n; also a comment\n[a.b-c]\nx = a#b\n").unwrap();
        let g = ini.section("grid").unwrap();
        let h = g.get("h").unwrap();
        assert_eq!((h.value.as_str(), h.line, h.column), ("0.04, 0.02", 3, 5));
        assert_eq!(h.list::<f64>("number").unwrap(), vec![0.04, 0.02]);
        assert_eq!(h.items()[1].column, 11);
        let l = g.get("lambda").unwrap();
        assert_eq!((l.line, l.column), (4, 10));
        // `#` inside a word is data
        assert_eq!(ini.section("a.b-c").unwrap().get("x").unwrap().value, "a#b");
    }

    #[test]
    fn errors_carry_positions() {
        assert_eq!(pos(parse("x = 1\n")), (1, 1));
        assert_eq!(pos(parse("[a]\n  novalue\n")), (2, 3));
        assert_eq!(pos(parse("[a]\n[a]\n")), (2, 2));
        assert_eq!(pos(parse("[a]\nk = 1\nk = 2\n")), (3, 1));
        assert_eq!(pos(parse("[a\n")), (1, 1));
        assert_eq!(pos(parse("[a] x\n")), (1, 5));
        assert_eq!(pos(parse("[a]\nb@d = 1\n")), (2, 1));
    }

    #[test]
    fn typed_values_point_at_the_item() {
        let ini = parse("[g]\nh = 0.1, oops\nflag = maybe\n").unwrap();
        let g = ini.section("g").unwrap();
        match g.get("h").unwrap().list::<f64>("a number") {
            Err(CliError::Config { line: 2, column: 10, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(g.get("flag").unwrap().flag().is_err());
        let w = parse("[d]\nu0 = riemann  0 1 0\n").unwrap().sections[0].entries[0].words();
        assert_eq!(w.iter().map(|e| e.column).collect::<Vec<_>>(), vec![6, 15, 17, 19]);
    }
}
