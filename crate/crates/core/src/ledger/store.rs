//! Append-only block log.
//!
//! Each record is `u32 length ‖ canonical block bytes ‖ 32-byte block hash`.
//! The log is the source of truth; world state is rebuilt from it on open.

use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use super::types::Block;
use super::verify::{CorruptionReason, VerificationReport};
use crate::digest::Digest;

pub struct BlockLog {
    path: PathBuf,
    file: File,
}

impl BlockLog {
    pub fn open(path: impl AsRef<Path>) -> io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self { path, file })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, block: &Block) -> io::Result<()> {
        self.file.write_all(&encode_record(block))?;
        self.file.flush()
    }
}

pub fn encode_record(block: &Block) -> Vec<u8> {
    let canonical = block.canonical_bytes();
    let mut out = Vec::with_capacity(canonical.len() + 36);
    out.extend_from_slice(&(canonical.len() as u32).to_be_bytes());
    out.extend_from_slice(&canonical);
    out.extend_from_slice(block.block_hash.as_bytes());
    out
}

/// Byte range `[start, end)` of each record in a log, in height order.
pub fn record_spans(bytes: &[u8]) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut pos = 0usize;
    while pos + 4 <= bytes.len() {
        let len = u32::from_be_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize;
        let end = pos + 4 + len + 32;
        if end > bytes.len() {
            break;
        }
        spans.push((pos, end));
        pos = end;
    }
    spans
}

/// Parses and verifies a serialized log. On success returns the blocks; on
/// failure returns the report naming the lowest bad height.
pub fn decode_log(bytes: &[u8]) -> Result<Vec<Block>, VerificationReport> {
    let mut blocks = Vec::new();
    let mut pos = 0usize;
    let mut prev = Digest::ZERO;
    while pos < bytes.len() {
        let height = blocks.len() as u64;
        let bad = |reason| VerificationReport::Corrupted { first_bad_height: height, reason };
        if bytes.len() - pos < 4 {
            return Err(bad(CorruptionReason::Malformed));
        }
        let len = u32::from_be_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize;
        let body_start = pos + 4;
        let Some(hash_start) = body_start.checked_add(len).filter(|&h| h + 32 <= bytes.len()) else {
            return Err(bad(CorruptionReason::Malformed));
        };
        let canonical = &bytes[body_start..hash_start];
        let stored = Digest(bytes[hash_start..hash_start + 32].try_into().unwrap());
        if Digest::of(canonical) != stored {
            return Err(bad(CorruptionReason::HashMismatch));
        }
        let block = Block::decode_canonical(canonical, stored).map_err(|_| bad(CorruptionReason::Malformed))?;
        if block.height != height {
            return Err(bad(CorruptionReason::HeightMismatch));
        }
        if block.prev_hash != prev {
            return Err(bad(CorruptionReason::BrokenLink));
        }
        prev = stored;
        blocks.push(block);
        pos = hash_start + 32;
    }
    Ok(blocks)
}

pub fn verify_log_bytes(bytes: &[u8]) -> VerificationReport {
    match decode_log(bytes) {
        Ok(blocks) => VerificationReport::Ok { blocks: blocks.len() as u64 },
        Err(report) => report,
    }
}

pub fn verify_log_file(path: impl AsRef<Path>) -> io::Result<VerificationReport> {
    Ok(verify_log_bytes(&std::fs::read(path)?))
}
