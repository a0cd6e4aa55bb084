use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::tokens::{normalize, tokenize};
use crate::codec::Encoder;
use crate::digest::Digest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CueCategory {
    #[serde(rename = "sensationalism")]
    Sensationalism,
    #[serde(rename = "urgency")]
    Urgency,
    #[serde(rename = "conspiracy")]
    Conspiracy,
    #[serde(rename = "clickbait")]
    Clickbait,
    #[serde(rename = "unsourced-claim")]
    UnsourcedClaim,
}

impl CueCategory {
    pub const ALL: [CueCategory; 5] = [
        CueCategory::Sensationalism,
        CueCategory::Urgency,
        CueCategory::Conspiracy,
        CueCategory::Clickbait,
        CueCategory::UnsourcedClaim,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CueCategory::Sensationalism => "sensationalism",
            CueCategory::Urgency => "urgency",
            CueCategory::Conspiracy => "conspiracy",
            CueCategory::Clickbait => "clickbait",
            CueCategory::UnsourcedClaim => "unsourced-claim",
        }
    }
}

impl fmt::Display for CueCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CueCategory {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        CueCategory::ALL.into_iter().find(|c| c.as_str() == s).ok_or(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CueEntry {
    pub category: CueCategory,
    pub weight: f64,
    pub pattern: String,
    /// Normalized pattern words.
    pub(crate) words: Vec<String>,
}

impl CueEntry {
    pub fn new(category: CueCategory, weight: f64, pattern: &str) -> Result<Self, LexiconError> {
        if !(weight > 0.0 && weight < 1.0) {
            return Err(LexiconError::Weight { line: 0, weight });
        }
        let words: Vec<String> = tokenize(pattern).map(|t| normalize(t.text)).collect();
        if words.is_empty() {
            return Err(LexiconError::EmptyPattern { line: 0 });
        }
        Ok(Self { category, weight, pattern: pattern.to_owned(), words })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LexiconError {
    #[error("line {line}: expected `category<TAB>weight<TAB>pattern`")]
    Format { line: usize },
    #[error("line {line}: unknown category `{category}`")]
    Category { line: usize, category: String },
    #[error("line {line}: weight {weight} outside (0, 1)")]
    Weight { line: usize, weight: f64 },
    #[error("line {line}: empty pattern")]
    EmptyPattern { line: usize },
    #[error("lexicon has no entries")]
    Empty,
    #[error("cannot read lexicon: {0}")]
    Io(String),
}

impl LexiconError {
    fn at(self, line: usize) -> Self {
        match self {
            LexiconError::Weight { weight, .. } => LexiconError::Weight { line, weight },
            LexiconError::EmptyPattern { .. } => LexiconError::EmptyPattern { line },
            other => other,
        }
    }
}

/// Weighted cue patterns. Entry order is significant: it is the cue id.
#[derive(Debug, Clone, PartialEq)]
pub struct CueLexicon {
    entries: Vec<CueEntry>,
    version: Digest,
}

const DEFAULT_LEXICON: &str = include_str!("../../data/default_lexicon.tsv");

impl CueLexicon {
    pub fn new(entries: Vec<CueEntry>) -> Result<Self, LexiconError> {
        if entries.is_empty() {
            return Err(LexiconError::Empty);
        }
        let mut e = Encoder::new();
        e.len(entries.len());
        for entry in &entries {
            e.str(entry.category.as_str()).u64(entry.weight.to_bits()).str(&entry.pattern);
        }
        let version = Digest::of(e.as_slice());
        Ok(Self { entries, version })
    }

    /// The lexicon shipped with the crate.
    pub fn default_lexicon() -> Self {
        Self::parse(DEFAULT_LEXICON).expect("bundled lexicon is valid")
    }

    /// Parses the line format `category<TAB>weight<TAB>pattern`. Blank lines
    /// and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
                continue;
            }
            let mut fields = raw.splitn(3, '\t');
            let (Some(cat), Some(weight), Some(pattern)) = (fields.next(), fields.next(), fields.next()) else {
                return Err(LexiconError::Format { line });
            };
            let category = cat
                .trim()
                .parse()
                .map_err(|_| LexiconError::Category { line, category: cat.trim().to_owned() })?;
            let weight: f64 = weight.trim().parse().map_err(|_| LexiconError::Format { line })?;
            entries.push(CueEntry::new(category, weight, pattern.trim()).map_err(|e| e.at(line))?);
        }
        Self::new(entries)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LexiconError> {
        let text = std::fs::read_to_string(path).map_err(|e| LexiconError::Io(e.to_string()))?;
        Self::parse(&text)
    }

    pub fn entries(&self) -> &[CueEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Digest of the canonical serialization of all entries.
    pub fn version(&self) -> Digest {
        self.version
    }
}
