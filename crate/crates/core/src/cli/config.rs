//! Flat `key = value` configuration with `[section]` headers.
//!
//! ```text
//! seed = 7
//! [spec]
//! family = stable
//! d = 3
//! alpha = 1.0
//! [task]
//! r_min = 0.01
//! ```
//!
//! Keys before the first header belong to the top-level section `""`.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use crate::error::{Error, Result};

pub const SECTIONS: [&str; 5] = ["", "spec", "task", "mc", "quadrature"];

/// A value with the position of its first character (1-based; line 0 is the command line).
#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub value: String,
    pub line: usize,
    pub column: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawConfig {
    pub sections: BTreeMap<String, BTreeMap<String, Entry>>,
    headers: BTreeMap<String, usize>,
}

fn err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::ConfigParse { line, column, message: message.into() }
}

fn valid_key(k: &str) -> bool {
    !k.is_empty() && k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Drops a trailing `# comment` that is not inside quotes.
fn strip_comment(s: &str) -> &str {
    let mut quoted = false;
    let mut prev_space = true;
    for (i, c) in s.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' | ';' if !quoted && prev_space => return &s[..i],
            _ => {}
        }
        prev_space = c.is_whitespace();
    }
    s
}

fn unquote(v: &str) -> &str {
    if v.len() >= 2 && v.starts_with('"') && v.ends_with('"') { &v[1..v.len() - 1] } else { v }
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RawConfig::default();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = strip_comment(raw);
            let trimmed = body.trim();
            if trimmed.is_empty() {
                continue;
            }
            let indent = body.chars().take_while(|c| c.is_whitespace()).count();
            if let Some(rest) = trimmed.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(line, indent + trimmed.chars().count(), "expected `]`"))?
                    .trim();
                if !SECTIONS.contains(&name) || name.is_empty() {
                    return Err(err(line, indent + 2, format!("unknown section `{name}`")));
                }
                if cfg.headers.insert(name.to_string(), line).is_some() {
                    return Err(err(line, indent + 2, format!("section `{name}` repeated")));
                }
                section = name.to_string();
                continue;
            }
            let eq = trimmed.find('=').ok_or_else(|| err(line, indent + 1, "expected `key = value`"))?;
            let key = trimmed[..eq].trim();
            if !valid_key(key) {
                return Err(err(line, indent + 1, format!("invalid key `{key}`")));
            }
            let after = &trimmed[eq + 1..];
            let lead = after.chars().take_while(|c| c.is_whitespace()).count();
            let column = indent + trimmed[..eq].chars().count() + 2 + lead;
            cfg.insert(&section, key, Entry { value: unquote(after.trim()).to_string(), line, column }, indent + 1)?;
        }
        Ok(cfg)
    }

    fn insert(&mut self, section: &str, key: &str, entry: Entry, key_column: usize) -> Result<()> {
        let line = entry.line;
        let sec = self.sections.entry(section.to_string()).or_default();
        if sec.insert(key.to_string(), entry).is_some() {
            return Err(err(line, key_column, format!("key `{key}` repeated")));
        }
        Ok(())
    }

    /// Applies `section.key=value` (or `key=value`, meaning the task section unless
    /// the key is top-level) from the command line; later settings win.
    pub fn set(&mut self, spec: &str, position: usize) -> Result<()> {
        let (lhs, value) = spec.split_once('=').ok_or_else(|| err(0, position, format!("expected key=value, got `{spec}`")))?;
        let (section, key) = match lhs.split_once('.') {
            Some((s, k)) => (s.to_string(), k.to_string()),
            None if TOP_KEYS.contains(&lhs) => (String::new(), lhs.to_string()),
            None => ("task".to_string(), lhs.to_string()),
        };
        if !SECTIONS.contains(&section.as_str()) {
            return Err(err(0, position, format!("unknown section `{section}`")));
        }
        if !valid_key(&key) {
            return Err(err(0, position, format!("invalid key `{key}`")));
        }
        let entry = Entry { value: unquote(value.trim()).to_string(), line: 0, column: position };
        self.sections.entry(section).or_default().insert(key, entry);
        Ok(())
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.sections.get(section).and_then(|s| s.get(key))
    }

    fn header_line(&self, section: &str) -> usize {
        self.headers.get(section).copied().unwrap_or(0)
    }
}

pub const TOP_KEYS: [&str; 3] = ["seed", "out", "threads"];

/// Typed access that remembers which keys were consumed.
pub struct Reader<'a> {
    raw: &'a RawConfig,
    used: RefCell<BTreeSet<(String, String)>>,
}

impl<'a> Reader<'a> {
    pub fn new(raw: &'a RawConfig) -> Self {
        Self { raw, used: RefCell::new(BTreeSet::new()) }
    }

    pub fn entry(&self, section: &str, key: &str) -> Option<&'a Entry> {
        let e = self.raw.get(section, key);
        if e.is_some() {
            self.used.borrow_mut().insert((section.to_string(), key.to_string()));
        }
        e
    }

    pub fn get<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        match self.entry(section, key) {
            None => Ok(None),
            Some(e) => e.value.parse::<T>().map(Some).map_err(|_| {
                err(e.line, e.column, format!("cannot read `{}` as {} for `{key}`", e.value, std::any::type_name::<T>()))
            }),
        }
    }

    pub fn get_or<T: FromStr>(&self, section: &str, key: &str, default: T) -> Result<T> {
        Ok(self.get(section, key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, section: &str, key: &str) -> Result<T> {
        self.get(section, key)?.ok_or_else(|| self.missing(section, key))
    }

    pub fn missing(&self, section: &str, key: &str) -> Error {
        let sec = if section.is_empty() { "top level".to_string() } else { format!("[{section}]") };
        err(self.raw.header_line(section), 1, format!("missing key `{key}` in {sec}"))
    }

    /// Comma-separated numbers.
    pub fn list(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>> {
        match self.entry(section, key) {
            None => Ok(None),
            Some(e) => e
                .value
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(Some)
                .map_err(|_| err(e.line, e.column, format!("cannot read `{}` as a list of numbers for `{key}`", e.value))),
        }
    }

    /// Errors on the first key that was never read.
    pub fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        for (section, keys) in &self.raw.sections {
            for (key, e) in keys {
                if !used.contains(&(section.clone(), key.clone())) {
                    let sec = if section.is_empty() { "top level".to_string() } else { format!("[{section}]") };
                    return Err(err(e.line, e.column, format!("unknown key `{key}` in {sec}")));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_and_comments() {
        let cfg = RawConfig::parse("seed = 4 # four\n[spec]\n  family = \"stable\"\n").unwrap();
        assert_eq!(cfg.get("", "seed").unwrap(), &Entry { value: "4".into(), line: 1, column: 8 });
        assert_eq!(cfg.get("spec", "family").unwrap(), &Entry { value: "stable".into(), line: 3, column: 12 });
    }

    #[test]
    fn bad_lines_report_location() {
        assert_eq!(
            RawConfig::parse("[spec]\nfamily stable\n").unwrap_err(),
            Error::ConfigParse { line: 2, column: 1, message: "expected `key = value`".into() }
        );
        assert!(matches!(RawConfig::parse("[nope]\n"), Err(Error::ConfigParse { line: 1, column: 2, .. })));
        let cfg = RawConfig::parse("[task]\nr = abc\n").unwrap();
        let rd = Reader::new(&cfg);
        assert!(matches!(rd.get::<f64>("task", "r"), Err(Error::ConfigParse { line: 2, column: 5, .. })));
    }

    #[test]
    fn unread_keys_are_rejected() {
        let cfg = RawConfig::parse("[task]\nr = 1\nextra = 2\n").unwrap();
        let rd = Reader::new(&cfg);
        rd.require::<f64>("task", "r").unwrap();
        assert!(matches!(rd.finish(), Err(Error::ConfigParse { line: 3, column: 9, .. })));
    }
}
