//! Scripted end-to-end run on an in-process network with a logical block
//! clock: same seed, same ledger hashes.

use std::io::Write;
use std::path::Path;

use factledger_core::config::AppConfig;
use factledger_core::factcheck::{
    credential_digest, ops, query, ContentFormat, FactChecker, Finalization, RegisterReceipt, Verdict, VoteReceipt,
};
use factledger_core::ledger::{Operation, Role, Submitter};
use factledger_core::platform::{Platform, PlatformError};
use factledger_core::txflow::ClockMode;
use factledger_core::Digest;

use crate::corpus;
use crate::voters::choose_verdict;

#[derive(Debug, Clone, PartialEq)]
pub struct DemoReport {
    pub block_hashes: Vec<Digest>,
    pub state_digest: Digest,
    pub labeled: usize,
}

pub fn demo_config(seed: u64) -> AppConfig {
    let mut config = AppConfig { seed: Some(seed), ..Default::default() };
    config.network.clock = ClockMode::Logical { start_ms: 1_709_294_400_000, step_ms: 1_000 };
    config
}

/// Registers `posts` generated posts, has three checkers vote on each with
/// accuracy 0.8 and prints every step.
pub fn run(seed: u64, posts: usize, data_dir: Option<&Path>, out: &mut impl Write) -> Result<DemoReport, PlatformError> {
    let config = AppConfig { data_dir: data_dir.map(Path::to_path_buf), ..demo_config(seed) };
    let platform = Platform::from_config(&config)?;
    let curator = Submitter::new("demo-curator", "org1", Role::Curator);

    let mut checkers = Vec::new();
    for (i, name) in ["ana", "bruno", "carla"].into_iter().enumerate() {
        let org = config.network.orgs[i % config.network.orgs.len()].clone();
        let op = Operation::new(ops::CREATE_CHECKER)
            .arg("checker_id", name)
            .arg("credential_digest", credential_digest(name, "demo").to_hex())
            .arg("org", &org);
        let c = platform.execute_now::<FactChecker>(platform.operation_proposal(curator.clone(), op))?;
        let _ = writeln!(out, "checker {name} ({org}) created in block {}", c.location.height);
        checkers.push(Submitter::new(name, org, Role::FactChecker));
    }

    let mut labeled = 0;
    for entry in corpus::generate(posts, seed) {
        let p = platform.register_proposal(
            curator.clone(),
            &entry.content,
            ContentFormat::Text,
            &entry.created_at,
            &entry.author,
            &entry.platform,
        );
        let r = platform.execute_now::<RegisterReceipt>(p)?;
        let id = r.response.news_id;
        let _ = writeln!(
            out,
            "news {} registered in block {} score {:.3} notified {}",
            id,
            r.location.height,
            r.response.score.unwrap_or_default(),
            r.response.notified
        );
        let truth = entry.label.unwrap_or(Verdict::True);
        for who in &checkers {
            let verdict = choose_verdict(seed, &who.id, &id.to_hex(), truth, 0.8);
            let p = platform.vote_proposal(who.clone(), &id, verdict, &format!("reviewed by {}", who.id));
            let v = platform.execute_now::<VoteReceipt>(p)?;
            let _ = writeln!(out, "  sealed vote by {} in block {}", who.id, v.location.height);
            if let Some(Finalization::Finalized { result }) = v.response.finalization {
                labeled += 1;
                let _ = writeln!(out, "  labeled {} (aligned: {})", result.verdict.as_str(), result.aligned.join(", "));
            }
        }
    }

    let (block_hashes, state_digest, dashboard, report) = platform.with_ledger(|l| {
        (
            l.blocks().iter().map(|b| b.block_hash).collect::<Vec<_>>(),
            l.state().snapshot_digest(),
            query::dashboard(l, platform.threshold()),
            l.verify_chain(),
        )
    });
    let _ = writeln!(out, "dashboard {}", serde_json::to_string(&dashboard).unwrap_or_default());
    let _ = writeln!(out, "chain verification {}", serde_json::to_string(&report).unwrap_or_default());
    let _ = writeln!(out, "height {}", block_hashes.len().saturating_sub(1));
    let _ = writeln!(out, "tip {}", block_hashes.last().copied().unwrap_or(Digest::ZERO));
    let _ = writeln!(out, "state {state_digest}");
    Ok(DemoReport { block_hashes, state_digest, labeled })
}
