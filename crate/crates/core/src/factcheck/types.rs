use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::codec::Encoder;
use crate::digest::Digest;
use crate::scoring::PropensityReport;

pub const SALT_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Verdict {
    True,
    False,
    Partial,
}

impl Verdict {
    pub const ALL: [Verdict; 3] = [Verdict::True, Verdict::False, Verdict::Partial];

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::True => "True",
            Verdict::False => "False",
            Verdict::Partial => "Partial",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown verdict `{0}`")]
pub struct UnknownVerdict(pub String);

impl FromStr for Verdict {
    type Err = UnknownVerdict;

    /// Case-insensitive; `biased` is accepted as a synonym of `Partial`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "true" => Ok(Verdict::True),
            "false" => Ok(Verdict::False),
            "partial" | "biased" => Ok(Verdict::Partial),
            _ => Err(UnknownVerdict(s.to_owned())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContentFormat {
    Text,
    Image,
    Audio,
    Video,
}

impl ContentFormat {
    pub fn tag(self) -> &'static str {
        match self {
            ContentFormat::Text => "text",
            ContentFormat::Image => "image",
            ContentFormat::Audio => "audio",
            ContentFormat::Video => "video",
        }
    }
}

impl FromStr for ContentFormat {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "text" => Ok(ContentFormat::Text),
            "image" => Ok(ContentFormat::Image),
            "audio" => Ok(ContentFormat::Audio),
            "video" => Ok(ContentFormat::Video),
            _ => Err(()),
        }
    }
}

/// Content identity: `SHA-256(content bytes ‖ format tag)`.
pub fn news_id(content: &[u8], format: ContentFormat) -> Digest {
    Digest::of_parts([content, format.tag().as_bytes()])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewsMetadata {
    /// Creation date of the original post, RFC 3339 UTC.
    pub created_at: String,
    pub excerpt: String,
    pub author: String,
    pub source_platform: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", content = "verdict", rename_all = "snake_case")]
pub enum NewsStatus {
    Registered,
    UnderAnalysis,
    Labeled(Verdict),
}

impl NewsStatus {
    pub fn name(self) -> &'static str {
        match self {
            NewsStatus::Registered => "registered",
            NewsStatus::UnderAnalysis => "under_analysis",
            NewsStatus::Labeled(_) => "labeled",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewsAsset {
    pub news_id: Digest,
    /// Text body, or an off-chain locator for media formats.
    pub content: String,
    pub format: ContentFormat,
    pub metadata: NewsMetadata,
    pub score_report: Option<PropensityReport>,
    pub status: NewsStatus,
    pub registered_tx: Digest,
    pub label_tx: Option<Digest>,
    /// Checkers with a committed vote, in vote order. Not part of any public view.
    pub voters: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactChecker {
    pub checker_id: String,
    pub display_name: String,
    pub credential_digest: Digest,
    pub org: String,
    pub credibility: f64,
    pub active: bool,
    pub token_balance: u64,
    /// Number of votes excluded for failing to open their commitment.
    pub flags: u32,
}

/// Salted digest stored in place of a login credential.
pub fn credential_digest(principal_id: &str, credential: &str) -> Digest {
    let mut e = Encoder::new();
    e.str("factledger/credential/v1").str(principal_id).str(credential);
    Digest::of(e.as_slice())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteCommitment {
    pub checker_id: String,
    pub news_id: Digest,
    pub commitment: Digest,
    pub cast_tx: Digest,
    /// Set when the reveal failed to open the commitment.
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteReveal {
    pub checker_id: String,
    pub news_id: Digest,
    pub verdict: Verdict,
    pub rationale: String,
    #[serde(with = "crate::ledger::hex_bytes")]
    pub salt: Vec<u8>,
}

impl VoteReveal {
    /// `verdict ‖ rationale ‖ salt`. No verdict name is a prefix of another
    /// and the salt has fixed length, so the split is unambiguous.
    pub fn preimage(verdict: Verdict, rationale: &str, salt: &[u8]) -> Vec<u8> {
        let mut out = Vec::with_capacity(verdict.as_str().len() + rationale.len() + salt.len());
        out.extend_from_slice(verdict.as_str().as_bytes());
        out.extend_from_slice(rationale.as_bytes());
        out.extend_from_slice(salt);
        out
    }

    pub fn commitment_of(verdict: Verdict, rationale: &str, salt: &[u8]) -> Digest {
        Digest::of(&Self::preimage(verdict, rationale, salt))
    }

    pub fn commitment(&self) -> Digest {
        Self::commitment_of(self.verdict, &self.rationale, &self.salt)
    }

    /// Inverse of [`VoteReveal::preimage`].
    pub fn parse_preimage(bytes: &[u8]) -> Option<(Verdict, String, Vec<u8>)> {
        let split = bytes.len().checked_sub(SALT_LEN)?;
        let (body, salt) = bytes.split_at(split);
        let verdict = Verdict::ALL.into_iter().find(|v| body.starts_with(v.as_str().as_bytes()))?;
        let rationale = std::str::from_utf8(&body[verdict.as_str().len()..]).ok()?;
        Some((verdict, rationale.to_owned(), salt.to_vec()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TallyMode {
    SimpleMajority,
    CredibilityWeighted,
}

impl FromStr for TallyMode {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "simple_majority" => Ok(TallyMode::SimpleMajority),
            "credibility_weighted" => Ok(TallyMode::CredibilityWeighted),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsensusPolicy {
    pub quorum: usize,
    pub mode: TallyMode,
    pub reward_per_aligned_vote: u64,
    pub credibility_step: f64,
}

impl Default for ConsensusPolicy {
    fn default() -> Self {
        Self { quorum: 3, mode: TallyMode::SimpleMajority, reward_per_aligned_vote: 10, credibility_step: 0.1 }
    }
}

impl ConsensusPolicy {
    pub fn validate(&self) -> Result<(), String> {
        if self.quorum < 1 {
            return Err("quorum must be at least 1".into());
        }
        if !(self.credibility_step > 0.0 && self.credibility_step < 1.0) {
            return Err(format!("credibility step {} outside (0, 1)", self.credibility_step));
        }
        Ok(())
    }
}

pub const INITIAL_CREDIBILITY: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevealedVote {
    pub checker_id: String,
    pub verdict: Verdict,
    pub rationale: String,
    pub salt: String,
    pub commitment: Digest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusResult {
    pub news_id: Digest,
    pub verdict: Verdict,
    pub mode: TallyMode,
    pub tally: BTreeMap<Verdict, f64>,
    pub participants: Vec<String>,
    pub reveals: Vec<RevealedVote>,
    /// Checkers whose votes were excluded for a reveal mismatch.
    pub excluded: Vec<String>,
    /// Participants whose verdict matched the outcome and were rewarded.
    pub aligned: Vec<String>,
    pub reward_per_aligned_vote: u64,
    pub finalize_tx: Digest,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Notification {
    pub checker_id: String,
    pub news_id: Digest,
    pub dispatch_tx: Digest,
}

/// What happened when finalization ran.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Finalization {
    Finalized { result: ConsensusResult },
    /// Reveal mismatches dropped the openable votes below quorum.
    QuorumNotReached { excluded: Vec<String>, remaining: usize, quorum: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteReceipt {
    pub news_id: Digest,
    pub checker_id: String,
    pub commitment: Digest,
    pub finalization: Option<Finalization>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegisterReceipt {
    pub news_id: Digest,
    pub score: Option<f64>,
    pub notified: usize,
}
