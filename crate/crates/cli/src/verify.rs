//! Offline verification of the per-organisation block logs in a data
//! directory.

use std::path::{Path, PathBuf};

use factledger_core::ledger::{decode_log, verify_blocks, Block, CorruptionReason, Ledger, LedgerError, VerificationReport};
use factledger_core::txflow::{endorsement_check, NetworkConfig};
use factledger_core::Digest;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogReport {
    pub org: String,
    pub path: PathBuf,
    pub report: VerificationReport,
    /// Tip hash and replayed world-state digest of an intact log.
    pub tip: Option<Digest>,
    pub state_digest: Option<Digest>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirReport {
    pub logs: Vec<LogReport>,
    /// Every intact log ends at the same tip with the same state.
    pub replicas_agree: bool,
}

impl DirReport {
    pub fn is_ok(&self) -> bool {
        self.replicas_agree && self.logs.iter().all(|l| l.report.is_ok())
    }

    pub fn first_bad_height(&self) -> Option<u64> {
        self.logs.iter().filter_map(|l| l.report.first_bad_height()).min()
    }
}

impl LogReport {
    pub fn blocks(&self) -> u64 {
        match self.report {
            VerificationReport::Ok { blocks } => blocks,
            VerificationReport::Corrupted { first_bad_height, .. } => first_bad_height,
        }
    }
}

/// Decodes and hash-checks the log, then replays it (re-running MVCC and
/// endorsement validation under `network`) to recompute the world state.
pub fn verify_log(org: &str, path: &Path, network: &NetworkConfig) -> std::io::Result<LogReport> {
    let bytes = std::fs::read(path)?;
    let check = endorsement_check(network);
    let (report, tip, state_digest) = match decode_log(&bytes) {
        Err(report) => (report, None, None),
        Ok(blocks) => match Ledger::replay_with(&blocks, &check) {
            Ok(ledger) => (
                VerificationReport::Ok { blocks: blocks.len() as u64 },
                blocks.last().map(|b| b.block_hash),
                Some(ledger.state().snapshot_digest()),
            ),
            Err(e) => (replay_failure(&blocks, e), None, None),
        },
    };
    Ok(LogReport { org: org.to_owned(), path: path.to_owned(), report, tip, state_digest })
}

// Hashes check out but re-validation disagrees with the recorded flags.
fn replay_failure(blocks: &[Block], e: LedgerError) -> VerificationReport {
    let height = match e {
        LedgerError::ReplayDivergence { height } => height,
        _ => blocks.len().saturating_sub(1) as u64,
    };
    match verify_blocks(blocks) {
        VerificationReport::Ok { .. } => {
            VerificationReport::Corrupted { first_bad_height: height, reason: CorruptionReason::Malformed }
        }
        bad => bad,
    }
}

/// Verifies `<dir>/<org>/blocks.log` for every organisation directory.
pub fn verify_dir(dir: &Path, network: &NetworkConfig) -> Result<DirReport, String> {
    if !dir.is_dir() {
        return Err(format!("{}: no such data directory", dir.display()));
    }
    let mut orgs: Vec<(String, PathBuf)> = std::fs::read_dir(dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .filter_map(Result::ok)
        .map(|e| (e.file_name().to_string_lossy().into_owned(), e.path().join("blocks.log")))
        .filter(|(_, p)| p.is_file())
        .collect();
    orgs.sort();
    if orgs.is_empty() {
        return Err(format!("{}: no block logs found (expected <org>/blocks.log)", dir.display()));
    }
    let logs = orgs
        .iter()
        .map(|(org, path)| verify_log(org, path, network).map_err(|e| format!("{}: {e}", path.display())))
        .collect::<Result<Vec<_>, _>>()?;
    let mut heads = logs.iter().filter(|l| l.report.is_ok()).map(|l| (l.tip, l.state_digest));
    let first = heads.next();
    let replicas_agree = heads.all(|h| Some(h) == first);
    Ok(DirReport { logs, replicas_agree })
}
