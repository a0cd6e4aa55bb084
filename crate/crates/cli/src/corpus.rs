//! JSON Lines corpus of posts to register, one [`CorpusEntry`] per line.

use std::path::Path;

use chrono::DateTime;
use factledger_core::factcheck::Verdict;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

fn unknown() -> String {
    "unknown".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub external_id: String,
    pub content: String,
    #[serde(default = "unknown")]
    pub author: String,
    #[serde(default = "unknown")]
    pub platform: String,
    pub created_at: String,
    /// Ground truth, used by simulated voters only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Verdict>,
}

impl CorpusEntry {
    pub fn validate(&self) -> Result<(), String> {
        if self.content.trim().is_empty() {
            return Err("content is empty".into());
        }
        DateTime::parse_from_rfc3339(&self.created_at).map_err(|e| format!("created_at `{}`: {e}", self.created_at))?;
        Ok(())
    }
}

/// One parsed line: its 1-based line number and the entry or the reason it
/// was rejected.
pub type CorpusLine = (usize, Result<CorpusEntry, String>);

pub fn parse(text: &str) -> Vec<CorpusLine> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let entry = serde_json::from_str::<CorpusEntry>(l)
                .map_err(|e| e.to_string())
                .and_then(|e| e.validate().map(|_| e));
            (i + 1, entry)
        })
        .collect()
}

pub fn read(path: &Path) -> std::io::Result<Vec<CorpusLine>> {
    Ok(parse(&std::fs::read_to_string(path)?))
}

pub fn to_jsonl(entries: &[CorpusEntry]) -> String {
    entries.iter().map(|e| serde_json::to_string(e).expect("entry serializes") + "\n").collect()
}

const TOPICS: [&str; 8] = [
    "the city council budget",
    "a new vaccine trial",
    "the river flood warning",
    "the national election count",
    "a celebrity health rumour",
    "the fuel price increase",
    "a school closure",
    "the bridge construction contract",
];

const CUES: [&str; 10] = [
    "SHOCKING",
    "URGENT",
    "share before it's deleted",
    "they don't want you to know",
    "cover-up",
    "doctors hate",
    "sources say",
    "wake up",
    "you won't believe",
    "spread the word",
];

const SOURCES: [&str; 4] = ["twitter", "facebook", "whatsapp", "telegram"];

/// Synthetic posts with ground-truth labels. Cue-heavy posts are mostly
/// false; plain reports are mostly true.
pub fn generate(n: usize, seed: u64) -> Vec<CorpusEntry> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let topic = TOPICS.choose(&mut rng).expect("topics");
            let cues = match rng.random_range(0..10) {
                0..=3 => 0,
                4..=6 => 1,
                7..=8 => 2,
                _ => 3,
            };
            let picked: Vec<&str> = CUES.choose_multiple(&mut rng, cues).copied().collect();
            let content = if picked.is_empty() {
                format!("Report #{i}: officials published an update on {topic}.")
            } else {
                format!("{} about {topic}! Post #{i}.", picked.join(", "))
            };
            let r: f64 = rng.random();
            let label = match (cues, r) {
                (0, r) if r < 0.7 => Verdict::True,
                (0, r) if r < 0.9 => Verdict::Partial,
                (0, _) => Verdict::False,
                (_, r) if r < 0.65 => Verdict::False,
                (_, r) if r < 0.85 => Verdict::Partial,
                _ => Verdict::True,
            };
            CorpusEntry {
                external_id: format!("post-{i:05}"),
                content,
                author: format!("user{}", rng.random_range(0..50)),
                platform: SOURCES.choose(&mut rng).expect("sources").to_string(),
                created_at: format!("2024-03-{:02}T{:02}:{:02}:00Z", 1 + i / 1440 % 28, i / 60 % 24, i % 60),
                label: Some(label),
            }
        })
        .collect()
}
