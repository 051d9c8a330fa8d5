//! Minimal sectioned key-value config format.
//!
//! Lines are `key = value`; `[section]` headers group keys; `#` starts a
//! comment. Keys outside any header belong to the unnamed section `""`.
//! Readers consume keys explicitly and any unread key is a hard error, so
//! typos in config files surface instead of being silently ignored.

use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KeyValError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    BadLine { line: usize, text: String },
    #[error("line {line}: duplicate key `{key}` in section `[{section}]`")]
    DuplicateKey {
        line: usize,
        section: String,
        key: String,
    },
    #[error("missing key `{key}` in section `[{section}]`")]
    MissingKey { section: String, key: String },
    #[error("key `{key}` in section `[{section}]` (line {line}): {message}")]
    BadValue {
        section: String,
        key: String,
        line: usize,
        message: String,
    },
    #[error("unknown key `{key}` in section `[{section}]` (line {line})")]
    UnknownKey {
        section: String,
        key: String,
        line: usize,
    },
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

/// A parsed key-value file. Call [`KeyValueFile::section`] to read keys and
/// [`KeyValueFile::ensure_consumed`] once done.
#[derive(Debug, Clone)]
pub struct KeyValueFile {
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
}

impl KeyValueFile {
    pub fn parse(text: &str) -> Result<Self, KeyValError> {
        let mut sections: BTreeMap<String, BTreeMap<String, Entry>> = BTreeMap::new();
        let mut current = String::new();
        for (ix, raw) in text.lines().enumerate() {
            let line_no = ix + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                current = line[1..line.len() - 1].trim().to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let Some(eq) = line.find('=') else {
                return Err(KeyValError::BadLine {
                    line: line_no,
                    text: line.to_string(),
                });
            };
            let key = line[..eq].trim().to_string();
            let value = line[eq + 1..].trim().to_string();
            if key.is_empty() {
                return Err(KeyValError::BadLine {
                    line: line_no,
                    text: line.to_string(),
                });
            }
            let section = sections.entry(current.clone()).or_default();
            if section
                .insert(
                    key.clone(),
                    Entry {
                        value,
                        line: line_no,
                    },
                )
                .is_some()
            {
                return Err(KeyValError::DuplicateKey {
                    line: line_no,
                    section: current.clone(),
                    key,
                });
            }
        }
        Ok(Self { sections })
    }

    /// Start reading a section. Missing sections behave as empty.
    pub fn section(&mut self, name: &str) -> SectionReader<'_> {
        SectionReader {
            name: name.to_string(),
            entries: self.sections.entry(name.to_string()).or_default(),
        }
    }

    /// Error on the first key that was never consumed by a reader.
    pub fn ensure_consumed(&self) -> Result<(), KeyValError> {
        for (section, entries) in &self.sections {
            if let Some((key, entry)) = entries.iter().next() {
                return Err(KeyValError::UnknownKey {
                    section: section.clone(),
                    key: key.clone(),
                    line: entry.line,
                });
            }
        }
        Ok(())
    }

    /// Names of sections present in the file.
    pub fn section_names(&self) -> Vec<String> {
        self.sections.keys().cloned().collect()
    }
}

/// Reads and removes keys from one section.
pub struct SectionReader<'a> {
    name: String,
    entries: &'a mut BTreeMap<String, Entry>,
}

impl SectionReader<'_> {
    fn take(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    pub fn opt_str(&mut self, key: &str) -> Option<String> {
        self.take(key).map(|e| e.value)
    }

    pub fn req_str(&mut self, key: &str) -> Result<String, KeyValError> {
        self.opt_str(key).ok_or_else(|| KeyValError::MissingKey {
            section: self.name.clone(),
            key: key.to_string(),
        })
    }

    fn parse_with<T>(
        &mut self,
        key: &str,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<Option<T>, KeyValError> {
        match self.take(key) {
            None => Ok(None),
            Some(entry) => match parse(&entry.value) {
                Ok(v) => Ok(Some(v)),
                Err(message) => Err(KeyValError::BadValue {
                    section: self.name.clone(),
                    key: key.to_string(),
                    line: entry.line,
                    message,
                }),
            },
        }
    }

    pub fn opt_f64(&mut self, key: &str) -> Result<Option<f64>, KeyValError> {
        self.parse_with(key, |s| s.parse::<f64>().map_err(|e| e.to_string()))
    }

    pub fn opt_u64(&mut self, key: &str) -> Result<Option<u64>, KeyValError> {
        self.parse_with(key, |s| s.parse::<u64>().map_err(|e| e.to_string()))
    }

    pub fn opt_usize(&mut self, key: &str) -> Result<Option<usize>, KeyValError> {
        self.parse_with(key, |s| s.parse::<usize>().map_err(|e| e.to_string()))
    }

    /// Comma-separated list parsed element-wise.
    pub fn opt_list<T>(
        &mut self,
        key: &str,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<Option<Vec<T>>, KeyValError> {
        self.parse_with(key, |s| {
            s.split(',')
                .map(|item| parse(item.trim()))
                .collect::<Result<Vec<T>, String>>()
        })
    }
}
