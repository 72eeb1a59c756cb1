//! Durations and INI-style configuration files.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Parses `<int><unit>` with unit `s`, `m`, `h` or `d` into seconds.
pub fn parse_duration(s: &str) -> Result<i64> {
    let s = s.trim();
    let bad = || Error::Config(format!("invalid duration {s:?}: expected <int><s|m|h|d>"));
    let unit = s.chars().last().ok_or_else(bad)?;
    let scale = match unit {
        's' => 1,
        'm' => 60,
        'h' => 3600,
        'd' => 86_400,
        _ => return Err(bad()),
    };
    let digits = &s[..s.len() - 1];
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let n: i64 = digits.parse().map_err(|_| bad())?;
    let secs = n.checked_mul(scale).ok_or_else(bad)?;
    if secs == 0 {
        return Err(Error::Config(format!("duration {s:?} must be positive")));
    }
    Ok(secs)
}

/// Renders seconds in the largest unit that divides them exactly.
pub fn format_duration(secs: i64) -> String {
    for (unit, scale) in [('d', 86_400), ('h', 3600), ('m', 60)] {
        if secs != 0 && secs % scale == 0 {
            return format!("{}{unit}", secs / scale);
        }
    }
    format!("{secs}s")
}

/// Flat `section.key → value` view of an INI file. Keys before any section
/// header live under their bare name. Keys are lowercased and `-` is
/// normalised to `_` so they match command-line flag names.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IniFile {
    pub values: BTreeMap<String, String>,
}

fn normalise(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

impl IniFile {
    pub fn parse(text: &str) -> Result<IniFile> {
        let mut values = BTreeMap::new();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Config(format!("config line {}: unterminated section", i + 1)))?;
                section = normalise(name);
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("config line {}: expected key = value", i + 1)))?;
            let key = normalise(k);
            if key.is_empty() {
                return Err(Error::Config(format!("config line {}: empty key", i + 1)));
            }
            let full = if section.is_empty() { key } else { format!("{section}.{key}") };
            values.insert(full, v.trim().trim_matches('"').to_string());
        }
        Ok(IniFile { values })
    }

    pub fn load(path: &Path) -> Result<IniFile> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        IniFile::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Typed lookup; a present but unparsable value is an error.
    pub fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("config key {key}: cannot parse {v:?}"))),
        }
    }

    pub fn duration(&self, key: &str) -> Result<Option<i64>> {
        self.get(key).map(parse_duration).transpose()
    }

    pub fn flag(&self, key: &str) -> Result<Option<bool>> {
        match self.get(key).map(str::to_ascii_lowercase).as_deref() {
            None => Ok(None),
            Some("true" | "yes" | "1" | "on") => Ok(Some(true)),
            Some("false" | "no" | "0" | "off") => Ok(Some(false)),
            Some(v) => Err(Error::Config(format!("config key {key}: expected a boolean, got {v:?}"))),
        }
    }
}
