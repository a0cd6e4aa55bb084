//! Line-oriented `key = value` configuration text.
//!
//! ```text
//! # comment
//! network.orgs = org1, org2, org3
//! policy.quorum = 3
//! ```
//!
//! Keys are dotted lowercase names. A later line overrides an earlier one.

use std::collections::BTreeMap;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KvError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("`{key}`: invalid value `{value}`")]
    Invalid { key: String, value: String },
    #[error("`{key}`: {message}")]
    Constraint { key: String, message: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KvConfig {
    entries: BTreeMap<String, String>,
}

impl KvConfig {
    pub fn parse(text: &str) -> Result<Self, KvError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(KvError::Syntax { line: i + 1 })?;
            let k = k.trim();
            if k.is_empty() {
                return Err(KvError::Syntax { line: i + 1 });
            }
            entries.insert(k.to_owned(), v.trim().to_owned());
        }
        Ok(Self { entries })
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.entries.insert(key.into(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, KvError> {
        self.get(key)
            .map(|v| v.parse().map_err(|_| KvError::Invalid { key: key.to_owned(), value: v.to_owned() }))
            .transpose()
    }

    pub fn parsed_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, KvError> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    /// Comma-separated list, trimmed, empty items dropped.
    pub fn list(&self, key: &str) -> Option<Vec<String>> {
        self.get(key)
            .map(|v| v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_owned).collect())
    }

    /// `(suffix, value)` for every key starting with `prefix`.
    pub fn with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = (&'a str, &'a str)> + 'a {
        self.entries
            .iter()
            .filter_map(move |(k, v)| k.strip_prefix(prefix).map(|s| (s, v.as_str())))
    }

    /// Overrides each of `keys` from the environment variable
    /// `<PREFIX>_<KEY>` where the key is upper-cased and `.`/`-` become `_`.
    pub fn apply_env<'k>(
        &mut self,
        prefix: &str,
        keys: impl IntoIterator<Item = &'k str>,
        lookup: impl Fn(&str) -> Option<String>,
    ) {
        for key in keys {
            if let Some(v) = lookup(&env_name(prefix, key)) {
                self.entries.insert(key.to_owned(), v);
            }
        }
    }
}

pub fn env_name(prefix: &str, key: &str) -> String {
    let tail: String = key
        .chars()
        .map(|c| match c {
            '.' | '-' => '_',
            c => c.to_ascii_uppercase(),
        })
        .collect();
    format!("{prefix}_{tail}")
}
