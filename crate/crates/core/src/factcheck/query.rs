//! Read-side views over committed state. Public views never carry voter
//! identities or verdicts of unlabeled news.

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::error::FactCheckError;
use super::keys;
use super::types::*;
use crate::digest::Digest;
use crate::ledger::Ledger;
use crate::scoring::{is_suspicious, MatchedCue};

/// Where a transaction landed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxRef {
    pub tx_id: Digest,
    pub block: u64,
    pub index: u32,
}

fn tx_ref(ledger: &Ledger, tx_id: Digest) -> Option<TxRef> {
    ledger.tx_location(&tx_id).map(|v| TxRef { tx_id, block: v.height, index: v.tx_index })
}

fn read<T: DeserializeOwned>(ledger: &Ledger, key: &str) -> Result<Option<T>, FactCheckError> {
    ledger
        .state_get(key)
        .map(|(b, _)| serde_json::from_slice(b).map_err(|_| FactCheckError::CorruptState(key.to_owned())))
        .transpose()
}

fn scan<'a, T: DeserializeOwned + 'a>(ledger: &'a Ledger, prefix: &'a str) -> impl Iterator<Item = T> + 'a {
    ledger.state().scan_prefix(prefix).filter_map(|(_, b, _)| serde_json::from_slice(b).ok())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusView {
    pub verdict: Verdict,
    pub mode: TallyMode,
    pub tally: BTreeMap<Verdict, f64>,
    pub participants: Vec<String>,
    pub reveals: Vec<RevealedVote>,
    pub excluded: Vec<String>,
    pub aligned: Vec<String>,
    pub reward_per_aligned_vote: u64,
    /// Height of the block holding the finalizing transaction.
    pub finalized_at: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewsView {
    pub news_id: Digest,
    pub format: ContentFormat,
    pub content: String,
    pub metadata: NewsMetadata,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub verdict: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub label_block: Option<u64>,
    pub score: Option<f64>,
    pub suspicious: bool,
    pub matched_cues: Vec<MatchedCue>,
    pub explanation: Option<String>,
    pub lexicon_version: Option<Digest>,
    pub registered: Option<TxRef>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub label: Option<TxRef>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub consensus: Option<ConsensusView>,
}

impl NewsView {
    fn build(ledger: &Ledger, asset: NewsAsset, threshold: f64) -> Self {
        let verdict = match asset.status {
            NewsStatus::Labeled(v) => Some(v),
            _ => None,
        };
        let label = asset.label_tx.and_then(|t| tx_ref(ledger, t));
        let consensus = verdict
            .and_then(|_| read::<ConsensusResult>(ledger, &keys::consensus(&asset.news_id)).ok().flatten())
            .map(|c| ConsensusView {
                verdict: c.verdict,
                mode: c.mode,
                tally: c.tally,
                participants: c.participants,
                reveals: c.reveals,
                excluded: c.excluded,
                aligned: c.aligned,
                reward_per_aligned_vote: c.reward_per_aligned_vote,
                finalized_at: ledger.tx_location(&c.finalize_tx).map(|v| v.height),
            });
        let report = asset.score_report;
        NewsView {
            news_id: asset.news_id,
            format: asset.format,
            content: asset.content,
            metadata: asset.metadata,
            status: asset.status.name().to_owned(),
            verdict,
            label_block: label.map(|l| l.block),
            score: report.as_ref().map(|r| r.score),
            suspicious: report.as_ref().is_some_and(|r| is_suspicious(r, threshold)),
            matched_cues: report.as_ref().map(|r| r.matched_cues.clone()).unwrap_or_default(),
            explanation: report.as_ref().map(|r| r.explanation.clone()),
            lexicon_version: report.as_ref().map(|r| r.lexicon_version),
            registered: tx_ref(ledger, asset.registered_tx),
            label,
            consensus,
        }
    }
}

pub fn news_asset(ledger: &Ledger, id: &Digest) -> Result<NewsAsset, FactCheckError> {
    read(ledger, &keys::news(id))?.ok_or_else(|| FactCheckError::NotFound(format!("news {id}")))
}

pub fn check_news(ledger: &Ledger, id: &Digest, threshold: f64) -> Result<NewsView, FactCheckError> {
    Ok(NewsView::build(ledger, news_asset(ledger, id)?, threshold))
}

pub fn all_news(ledger: &Ledger) -> impl Iterator<Item = NewsAsset> + '_ {
    scan(ledger, keys::NEWS_PREFIX)
}

/// Every asset in registration order.
pub fn list_news(ledger: &Ledger, threshold: f64) -> Vec<NewsView> {
    let mut all: Vec<(Option<TxRef>, NewsAsset)> = all_news(ledger).map(|a| (tx_ref(ledger, a.registered_tx), a)).collect();
    all.sort_by(|a, b| {
        let key = |r: &Option<TxRef>| r.map(|r| (r.block, r.index));
        key(&a.0).cmp(&key(&b.0)).then_with(|| a.1.news_id.cmp(&b.1.news_id))
    });
    all.into_iter().map(|(_, a)| NewsView::build(ledger, a, threshold)).collect()
}

/// Under-analysis assets scoring strictly above `threshold`, newest first.
pub fn list_suspicious(ledger: &Ledger, threshold: f64) -> Vec<NewsView> {
    let mut hits: Vec<(Option<TxRef>, NewsAsset)> = all_news(ledger)
        .filter(|a| a.status == NewsStatus::UnderAnalysis)
        .filter(|a| a.score_report.as_ref().is_some_and(|r| is_suspicious(r, threshold)))
        .map(|a| (tx_ref(ledger, a.registered_tx), a))
        .collect();
    hits.sort_by(|a, b| {
        let key = |r: &Option<TxRef>| r.map(|r| (r.block, r.index));
        key(&b.0).cmp(&key(&a.0)).then_with(|| a.1.news_id.cmp(&b.1.news_id))
    });
    hits.into_iter().map(|(_, a)| NewsView::build(ledger, a, threshold)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DashboardSummary {
    pub total_news: u64,
    /// Labeled assets, i.e. with a consensus result on-chain.
    pub total_on_chain: u64,
    pub ai_evaluated: u64,
    pub awaiting_evaluation: u64,
    pub suspicious_over_0_7: u64,
}

pub fn dashboard(ledger: &Ledger, threshold: f64) -> DashboardSummary {
    let mut d = DashboardSummary::default();
    for a in all_news(ledger) {
        d.total_news += 1;
        if matches!(a.status, NewsStatus::Labeled(_)) {
            d.total_on_chain += 1;
        }
        if a.score_report.is_some() {
            d.ai_evaluated += 1;
        }
        if a.status == NewsStatus::UnderAnalysis {
            d.awaiting_evaluation += 1;
            if a.score_report.as_ref().is_some_and(|r| is_suspicious(r, threshold)) {
                d.suspicious_over_0_7 += 1;
            }
        }
    }
    d
}

/// A checker profile without its credential digest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckerView {
    pub checker_id: String,
    pub display_name: String,
    pub org: String,
    pub credibility: f64,
    pub active: bool,
    pub token_balance: u64,
    pub flags: u32,
}

impl From<FactChecker> for CheckerView {
    fn from(c: FactChecker) -> Self {
        CheckerView {
            checker_id: c.checker_id,
            display_name: c.display_name,
            org: c.org,
            credibility: c.credibility,
            active: c.active,
            token_balance: c.token_balance,
            flags: c.flags,
        }
    }
}

pub fn checker(ledger: &Ledger, id: &str) -> Result<FactChecker, FactCheckError> {
    read(ledger, &keys::checker(id))?.ok_or_else(|| FactCheckError::UnknownChecker(id.to_owned()))
}

pub fn list_checkers(ledger: &Ledger) -> Vec<FactChecker> {
    scan(ledger, keys::CHECKER_PREFIX).collect()
}

pub fn active_checkers(ledger: &Ledger) -> Vec<String> {
    read(ledger, keys::ACTIVE_CHECKERS).ok().flatten().unwrap_or_default()
}

pub fn reward_query(ledger: &Ledger, checker_id: &str) -> Result<u64, FactCheckError> {
    Ok(checker(ledger, checker_id)?.token_balance)
}

pub fn total_minted(ledger: &Ledger) -> u64 {
    read(ledger, keys::REWARD_TOTAL).ok().flatten().unwrap_or(0)
}

pub fn sum_balances(ledger: &Ledger) -> u64 {
    list_checkers(ledger).iter().map(|c| c.token_balance).sum()
}

pub fn consensus_results(ledger: &Ledger) -> Vec<ConsensusResult> {
    scan(ledger, keys::CONSENSUS_PREFIX).collect()
}

pub fn consensus(ledger: &Ledger, news: &Digest) -> Result<Option<ConsensusResult>, FactCheckError> {
    read(ledger, &keys::consensus(news))
}

pub fn vote_commitment(ledger: &Ledger, news: &Digest, checker: &str) -> Result<Option<VoteCommitment>, FactCheckError> {
    read(ledger, &keys::vote(news, checker))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NotificationView {
    pub news_id: Digest,
    pub dispatched_at: Option<u64>,
    pub status: String,
    /// True while the news is unlabeled and the checker has not voted.
    pub pending: bool,
}

/// Notifications addressed to `checker_id`, oldest first.
pub fn notifications(ledger: &Ledger, checker_id: &str) -> Vec<NotificationView> {
    let prefix = format!("{}{checker_id}/", keys::NOTIFICATION_PREFIX);
    let mut out: Vec<(Option<(u64, u32)>, NotificationView)> = ledger
        .state()
        .scan_prefix(&prefix)
        .filter_map(|(_, b, _)| serde_json::from_slice::<Notification>(b).ok())
        .filter_map(|n| {
            let asset = news_asset(ledger, &n.news_id).ok()?;
            let voted = ledger.state_get(&keys::vote(&n.news_id, checker_id)).is_some();
            let loc = ledger.tx_location(&n.dispatch_tx);
            Some((
                loc.map(|v| (v.height, v.tx_index)),
                NotificationView {
                    news_id: n.news_id,
                    dispatched_at: loc.map(|v| v.height),
                    status: asset.status.name().to_owned(),
                    pending: !voted && !matches!(asset.status, NewsStatus::Labeled(_)),
                },
            ))
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.news_id.cmp(&b.1.news_id)));
    out.into_iter().map(|(_, v)| v).collect()
}
