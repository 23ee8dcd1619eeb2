use std::fmt::{self, Display};
use std::path::Path;

use super::{write_bytes, FormatError};

/// Ordered `key=value` report. Floats use Rust's shortest round-trip
/// formatting, so identical values always print identically.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl Display) -> &mut Self {
        let key = key.into();
        debug_assert!(!key.contains('=') && !key.contains('\n'));
        self.entries.push((key, value.to_string()));
        self
    }

    /// Shortest round-trip form, switching to an exponent for very small
    /// or large magnitudes (`1e-16`, not sixteen zeros).
    pub fn push_f64(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        self.push(key, format!("{value:?}"))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _)| k.as_str())
    }

    /// Parses text produced by `Display`; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let mut report = Report::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                FormatError::BadHeader(format!("line {}: expected key=value", n + 1))
            })?;
            report.push(k.trim(), v.trim());
        }
        Ok(report)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), FormatError> {
        write_bytes(path.as_ref(), self.to_string().as_bytes())
    }
}

impl Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}
