//! Append-only hash-chained block store with a versioned world state.
//!
//! Transactions arrive already simulated (read/write sets attached). On
//! `append_block` each one is validated in block order: a transaction is
//! valid iff every `(key, version)` in its read set equals the key's
//! committed version at that point, counting writes of earlier valid
//! transactions in the same block. Only valid transactions touch state.

mod state;
mod store;
mod types;
mod verify;

use std::collections::{HashMap, HashSet};
use std::io;
use std::path::Path;

pub use state::{StateEntry, WorldState};
pub use store::{decode_log, encode_record, record_spans, verify_log_bytes, verify_log_file, BlockLog};
pub use types::{
    Block, Endorsement, InvalidReason, Operation, ReadEntry, Role, RwSet, Submitter, TransactionEnvelope, TxHeader,
    TxLocation, Validity, Version, WriteEntry, WriteValue,
};
pub use verify::{verify_blocks, CorruptionReason, VerificationReport};
pub(crate) use types::hex_bytes;

use crate::digest::Digest;

#[derive(Debug, thiserror::Error)]
pub enum LedgerError {
    #[error("chain not initialized")]
    ChainNotInitialized,
    #[error("chain already initialized")]
    AlreadyInitialized,
    #[error("block must contain at least one transaction")]
    EmptyBlock,
    #[error("not found")]
    NotFound,
    #[error("block log is corrupted: {0:?}")]
    CorruptLog(VerificationReport),
    #[error("replay diverged at height {height}")]
    ReplayDivergence { height: u64 },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Extra validation hook run before MVCC, e.g. an endorsement-policy check.
pub type TxCheck<'a> = &'a dyn Fn(&TransactionEnvelope) -> Option<InvalidReason>;

fn no_check(_: &TransactionEnvelope) -> Option<InvalidReason> {
    None
}

#[derive(Default)]
pub struct Ledger {
    blocks: Vec<Block>,
    state: WorldState,
    tx_index: HashMap<Digest, TxLocation>,
    log: Option<BlockLog>,
}

impl std::fmt::Debug for Ledger {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ledger")
            .field("height", &self.height())
            .field("state_keys", &self.state.len())
            .finish()
    }
}

impl Ledger {
    /// An uninitialized ledger with no genesis block.
    pub fn new() -> Self {
        Self::default()
    }

    /// A fresh in-memory ledger holding only the genesis block.
    pub fn with_genesis(timestamp_ms: u64) -> Self {
        let mut l = Self::new();
        l.init_genesis(timestamp_ms).expect("fresh ledger");
        l
    }

    pub fn init_genesis(&mut self, timestamp_ms: u64) -> Result<&Block, LedgerError> {
        if !self.blocks.is_empty() {
            return Err(LedgerError::AlreadyInitialized);
        }
        let genesis = Block::seal(0, Digest::ZERO, timestamp_ms, Vec::new());
        self.persist(&genesis)?;
        self.blocks.push(genesis);
        Ok(&self.blocks[0])
    }

    /// Opens (or creates) a ledger backed by the block log at `path`,
    /// rebuilding state by re-validating every logged block.
    pub fn open(path: impl AsRef<Path>, genesis_timestamp_ms: u64, check: TxCheck<'_>) -> Result<Self, LedgerError> {
        let path = path.as_ref();
        let existing = match std::fs::read(path) {
            Ok(bytes) => bytes,
            Err(e) if e.kind() == io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(e.into()),
        };
        let mut ledger = if existing.is_empty() {
            Ledger::new()
        } else {
            let blocks = decode_log(&existing).map_err(LedgerError::CorruptLog)?;
            Ledger::replay_with(&blocks, check)?
        };
        ledger.log = Some(BlockLog::open(path)?);
        if ledger.blocks.is_empty() {
            ledger.init_genesis(genesis_timestamp_ms)?;
        }
        Ok(ledger)
    }

    /// Rebuilds a ledger from an ordered block sequence by re-running
    /// validation; every recomputed hash must match the original.
    pub fn replay(blocks: &[Block]) -> Result<Self, LedgerError> {
        Self::replay_with(blocks, &no_check)
    }

    pub fn replay_with(blocks: &[Block], check: TxCheck<'_>) -> Result<Self, LedgerError> {
        let Some(genesis) = blocks.first() else {
            return Ok(Ledger::new());
        };
        let mut ledger = Ledger::with_genesis(genesis.timestamp_ms);
        if ledger.blocks[0].block_hash != genesis.block_hash {
            return Err(LedgerError::ReplayDivergence { height: 0 });
        }
        for original in &blocks[1..] {
            let txs = original
                .txs
                .iter()
                .cloned()
                .map(|mut tx| {
                    tx.validity = Validity::Pending;
                    tx
                })
                .collect();
            let rebuilt = ledger.append_block_checked(txs, original.timestamp_ms, check)?;
            if rebuilt.block_hash != original.block_hash {
                return Err(LedgerError::ReplayDivergence { height: original.height });
            }
        }
        Ok(ledger)
    }

    pub fn append_block(&mut self, txs: Vec<TransactionEnvelope>, timestamp_ms: u64) -> Result<&Block, LedgerError> {
        self.append_block_checked(txs, timestamp_ms, &no_check)
    }

    /// Validates `txs` in order, seals them into the next block and applies
    /// the writes of valid transactions.
    pub fn append_block_checked(
        &mut self,
        mut txs: Vec<TransactionEnvelope>,
        timestamp_ms: u64,
        check: TxCheck<'_>,
    ) -> Result<&Block, LedgerError> {
        let prev = self.blocks.last().ok_or(LedgerError::ChainNotInitialized)?;
        if txs.is_empty() {
            return Err(LedgerError::EmptyBlock);
        }
        let height = prev.height + 1;
        let prev_hash = prev.block_hash;

        // Versions written earlier in this block shadow committed state.
        let mut staged: HashMap<&str, Version> = HashMap::new();
        let mut seen: HashSet<Digest> = HashSet::new();
        let mut validity = Vec::with_capacity(txs.len());
        for (i, tx) in txs.iter().enumerate() {
            let v = if self.tx_index.contains_key(&tx.tx_id) || !seen.insert(tx.tx_id) {
                Validity::Invalid(InvalidReason::DuplicateTxId)
            } else if let Some(reason) = check(tx) {
                Validity::Invalid(reason)
            } else if tx.rwset.reads.iter().all(|r| {
                let current = staged.get(r.key.as_str()).copied().or_else(|| self.state.version_of(&r.key));
                current == r.version
            }) {
                let version = Version::new(height, i as u32);
                for w in &tx.rwset.writes {
                    staged.insert(w.key.as_str(), version);
                }
                Validity::Valid
            } else {
                Validity::Invalid(InvalidReason::MvccConflict)
            };
            validity.push(v);
        }
        drop(staged);
        for (tx, v) in txs.iter_mut().zip(validity) {
            tx.validity = v;
        }

        let block = Block::seal(height, prev_hash, timestamp_ms, txs);
        self.persist(&block)?;

        for (i, tx) in block.txs.iter().enumerate() {
            let loc = Version::new(height, i as u32);
            self.tx_index.entry(tx.tx_id).or_insert(loc);
            if tx.validity.is_valid() {
                for w in &tx.rwset.writes {
                    self.state.apply(&w.key, &w.value, loc);
                }
            }
        }
        self.blocks.push(block);
        Ok(self.blocks.last().unwrap())
    }

    fn persist(&mut self, block: &Block) -> Result<(), LedgerError> {
        if let Some(log) = self.log.as_mut() {
            log.append(block)?;
        }
        Ok(())
    }

    pub fn verify_chain(&self) -> VerificationReport {
        verify_blocks(&self.blocks)
    }

    /// Height of the latest block, or `None` before genesis.
    pub fn height(&self) -> Option<u64> {
        self.blocks.last().map(|b| b.height)
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn get_block(&self, height: u64) -> Result<&Block, LedgerError> {
        usize::try_from(height)
            .ok()
            .and_then(|h| self.blocks.get(h))
            .ok_or(LedgerError::NotFound)
    }

    pub fn get_transaction(&self, tx_id: &Digest) -> Result<(&TransactionEnvelope, TxLocation), LedgerError> {
        let loc = *self.tx_index.get(tx_id).ok_or(LedgerError::NotFound)?;
        let tx = &self.blocks[loc.height as usize].txs[loc.tx_index as usize];
        Ok((tx, loc))
    }

    pub fn tx_location(&self, tx_id: &Digest) -> Option<TxLocation> {
        self.tx_index.get(tx_id).copied()
    }

    pub fn state_get(&self, key: &str) -> Option<(&[u8], Version)> {
        self.state.get(key)
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    pub fn log_path(&self) -> Option<&Path> {
        self.log.as_ref().map(BlockLog::path)
    }

    /// Serialized form of the whole chain as written to the block log.
    pub fn chain_bytes(&self) -> Vec<u8> {
        self.blocks.iter().flat_map(encode_record).collect()
    }

    pub fn tx_count(&self) -> usize {
        self.tx_index.len()
    }
}
