#![allow(dead_code)]

use std::sync::Arc;

use factledger_core::config::AppConfig;
use factledger_core::factcheck::{
    credential_digest, ops, ConsensusPolicy, ContentFormat, FactChecker, RegisterReceipt, Verdict, VoteReceipt,
};
use factledger_core::ledger::{Operation, Role, Submitter};
use factledger_core::platform::{Committed, Platform, PlatformError};
use factledger_core::scoring::{CueLexicon, LexiconScorer, Scorer};
use factledger_core::txflow::{ClockMode, NetworkConfig};
use factledger_core::Digest;

pub fn curator() -> Submitter {
    Submitter { id: "curator".into(), org: "org1".into(), role: Role::Curator }
}

pub fn checker(id: &str, org: &str) -> Submitter {
    Submitter { id: id.into(), org: org.into(), role: Role::FactChecker }
}

pub fn logical_network() -> NetworkConfig {
    NetworkConfig { clock: ClockMode::Logical { start_ms: 1_700_000_000_000, step_ms: 1_000 }, ..Default::default() }
}

pub fn platform_with(policy: ConsensusPolicy, scorer: Arc<dyn Scorer>) -> Platform {
    let config = AppConfig { policy, network: logical_network(), seed: Some(7), ..Default::default() };
    Platform::with_scorer(&config, scorer, None).unwrap()
}

pub fn platform(policy: ConsensusPolicy) -> Platform {
    platform_with(policy, Arc::new(LexiconScorer::default()))
}

/// Scorer over a lexicon of `(weight, pattern)` sensationalism cues.
pub fn lexicon_scorer(cues: &[(f64, &str)]) -> Arc<dyn Scorer> {
    let text: String = cues.iter().map(|(w, p)| format!("sensationalism\t{w}\t{p}\n")).collect();
    Arc::new(LexiconScorer::new(CueLexicon::parse(&text).unwrap()))
}

pub fn create_checker(p: &Platform, id: &str, org: &str) -> Result<Committed<FactChecker>, PlatformError> {
    let op = Operation::new(ops::CREATE_CHECKER)
        .arg("checker_id", id)
        .arg("credential_digest", credential_digest(id, "pw").to_hex())
        .arg("org", org);
    p.execute_now(p.operation_proposal(curator(), op))
}

/// Creates `n` checkers `c0..` spread over the three organisations.
pub fn checkers(p: &Platform, n: usize) -> Vec<Submitter> {
    (0..n)
        .map(|i| {
            let id = format!("c{i}");
            let org = format!("org{}", i % 3 + 1);
            create_checker(p, &id, &org).unwrap();
            checker(&id, &org)
        })
        .collect()
}

pub fn register(p: &Platform, content: &str) -> Result<Committed<RegisterReceipt>, PlatformError> {
    p.execute_now(p.register_proposal(curator(), content, ContentFormat::Text, "2024-03-01T12:00:00Z", "a", "x"))
}

pub fn vote(
    p: &Platform,
    who: &Submitter,
    news: &Digest,
    verdict: Verdict,
    rationale: &str,
) -> Result<Committed<VoteReceipt>, PlatformError> {
    p.execute_now(p.vote_proposal(who.clone(), news, verdict, rationale))
}
