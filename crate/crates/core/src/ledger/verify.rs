use serde::{Deserialize, Serialize};

use super::types::Block;
use crate::digest::Digest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionReason {
    /// Recomputed hash differs from the stored `block_hash`.
    HashMismatch,
    /// `prev_hash` does not match the previous block's hash.
    BrokenLink,
    /// Stored height does not match the block's position.
    HeightMismatch,
    /// Bytes could not be decoded as a block record.
    Malformed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum VerificationReport {
    Ok { blocks: u64 },
    Corrupted { first_bad_height: u64, reason: CorruptionReason },
}

impl VerificationReport {
    pub fn is_ok(&self) -> bool {
        matches!(self, VerificationReport::Ok { .. })
    }

    pub fn first_bad_height(&self) -> Option<u64> {
        match self {
            VerificationReport::Ok { .. } => None,
            VerificationReport::Corrupted { first_bad_height, .. } => Some(*first_bad_height),
        }
    }

    /// Keeps whichever report names the lower corrupted height.
    pub fn merge(self, other: VerificationReport) -> VerificationReport {
        match (self.first_bad_height(), other.first_bad_height()) {
            (None, None) => self,
            (Some(_), None) => self,
            (None, Some(_)) => other,
            (Some(a), Some(b)) => {
                if b < a {
                    other
                } else {
                    self
                }
            }
        }
    }
}

/// Checks link, height and hash of every block, reporting the lowest bad one.
pub fn verify_blocks(blocks: &[Block]) -> VerificationReport {
    let mut prev = Digest::ZERO;
    for (i, block) in blocks.iter().enumerate() {
        let i = i as u64;
        let bad = |reason| VerificationReport::Corrupted { first_bad_height: i, reason };
        if block.height != i {
            return bad(CorruptionReason::HeightMismatch);
        }
        if block.prev_hash != prev {
            return bad(CorruptionReason::BrokenLink);
        }
        if block.compute_hash() != block.block_hash {
            return bad(CorruptionReason::HashMismatch);
        }
        prev = block.block_hash;
    }
    VerificationReport::Ok { blocks: blocks.len() as u64 }
}
