//! Flat `key=value` configuration files and their merge with command-line flags.
//!
//! Keys are the long flag names with dashes replaced by underscores
//! (`gain_weak_db=5`). Blank lines and lines starting with `#` are skipped.
//! A flag given on the command line always wins over the file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// A configuration problem; always reported with exit status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub const KEYS: [&str; 17] = [
    "ns",
    "n1",
    "n2",
    "n",
    "gain_weak_db",
    "gain_strong_db",
    "pmax",
    "r0",
    "epsilon",
    "trials",
    "method",
    "seed",
    "out",
    "axis",
    "values",
    "sizes",
    "reps",
];

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ConfigError(format!(
                    "config line {}: expected key=value, got `{line}`",
                    i + 1
                ))
            })?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(ConfigError(format!(
                    "config line {}: unknown key `{key}`",
                    i + 1
                )));
            }
            entries.insert(key.to_string(), value.trim().to_string());
        }
        Ok(ConfigFile { entries })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Flag value if present, otherwise the file's value parsed as `T`.
    pub fn resolve<T>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, ConfigError>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.entries
            .get(key)
            .map(|v| {
                v.parse::<T>().map_err(|e| {
                    ConfigError(format!("config key `{key}`: invalid value `{v}`: {e}"))
                })
            })
            .transpose()
    }
}

/// Comma-separated list of numbers, as taken by `--values` and `--sizes`.
#[derive(Debug, Clone, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: fmt::Display,
{
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|item| {
                let item = item.trim();
                item.parse::<T>().map_err(|e| format!("`{item}`: {e}"))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(List)
    }
}
