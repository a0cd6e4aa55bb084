//! Deterministic falsehood-propensity scoring.
//!
//! A post's score combines the weights of the distinct lexicon cues found in
//! its text with a noisy-or: `1 - Π(1 - wᵢ)`. Repeated matches of one cue
//! count once and the product runs in lexicon order, so the score does not
//! depend on where in the text a cue appears.

mod lexicon;
mod tokens;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use lexicon::{CueCategory, CueEntry, CueLexicon, LexiconError};

use crate::digest::Digest;
use tokens::{normalize, tokenize};

/// Threshold above which a post is listed as suspicious.
pub const SUSPICIOUS_THRESHOLD: f64 = 0.7;

const NO_CUES: &str = "no falsehood cues detected";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedCue {
    /// Index of the entry in the lexicon.
    pub cue_id: usize,
    pub category: CueCategory,
    pub weight: f64,
    /// Text of the first match, as written in the source.
    pub text: String,
    /// Byte span of the first match.
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropensityReport {
    pub score: f64,
    /// One entry per distinct cue, ordered by first match position.
    pub matched_cues: Vec<MatchedCue>,
    pub explanation: String,
    pub lexicon_version: Digest,
}

impl PropensityReport {
    pub fn is_suspicious(&self) -> bool {
        is_suspicious(self, SUSPICIOUS_THRESHOLD)
    }
}

/// Extension point for alternative scorers (e.g. an external model service).
pub trait Scorer: Send + Sync {
    fn score(&self, text: &str) -> PropensityReport;
}

#[derive(Debug, Clone)]
pub struct LexiconScorer {
    lexicon: CueLexicon,
}

impl LexiconScorer {
    pub fn new(lexicon: CueLexicon) -> Self {
        Self { lexicon }
    }

    pub fn lexicon(&self) -> &CueLexicon {
        &self.lexicon
    }
}

impl Default for LexiconScorer {
    fn default() -> Self {
        Self::new(CueLexicon::default_lexicon())
    }
}

impl Scorer for LexiconScorer {
    fn score(&self, text: &str) -> PropensityReport {
        score(text, &self.lexicon)
    }
}

pub fn score(text: &str, lexicon: &CueLexicon) -> PropensityReport {
    let toks: Vec<_> = tokenize(text).collect();
    let words: Vec<String> = toks.iter().map(|t| normalize(t.text)).collect();

    let mut matched = Vec::new();
    for (cue_id, entry) in lexicon.entries().iter().enumerate() {
        let n = entry.words.len();
        if n > words.len() {
            continue;
        }
        if let Some(at) = (0..=words.len() - n).find(|&i| words[i..i + n] == entry.words[..]) {
            let (start, end) = (toks[at].start, toks[at + n - 1].end);
            matched.push(MatchedCue {
                cue_id,
                category: entry.category,
                weight: entry.weight,
                text: text[start..end].to_owned(),
                start,
                end,
            });
        }
    }

    // Noisy-or folded in lexicon order as s + w(1 - s), which keeps a single
    // cue's score exactly equal to its weight.
    let score = matched.iter().fold(0.0, |s, m| s + m.weight * (1.0 - s)).clamp(0.0, 1.0);

    matched.sort_by_key(|m| (m.start, m.cue_id));
    let mut report = PropensityReport { score, matched_cues: matched, explanation: String::new(), lexicon_version: lexicon.version() };
    report.explanation = explain(&report);
    report
}

/// Strict comparison: a score equal to the threshold is not suspicious.
pub fn is_suspicious(report: &PropensityReport, threshold: f64) -> bool {
    report.score > threshold
}

/// One line per matched category, ordered by the category's first match.
pub fn explain(report: &PropensityReport) -> String {
    if report.matched_cues.is_empty() {
        return NO_CUES.to_owned();
    }
    let mut order: Vec<CueCategory> = Vec::new();
    let mut spans: BTreeMap<CueCategory, Vec<&MatchedCue>> = BTreeMap::new();
    for cue in &report.matched_cues {
        if !spans.contains_key(&cue.category) {
            order.push(cue.category);
        }
        spans.entry(cue.category).or_default().push(cue);
    }
    let mut out = String::new();
    for (i, cat) in order.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = write!(out, "{cat}:");
        for (j, cue) in spans[cat].iter().enumerate() {
            let sep = if j == 0 { " " } else { ", " };
            let _ = write!(out, "{sep}\"{}\" [{}..{}]", cue.text, cue.start, cue.end);
        }
    }
    out
}
