//! Execute-order-validate transaction lifecycle over simulated organisations.
//!
//! * **Execute**: a proposal is simulated by the first `E` online
//!   organisations against their committed state. Their results (read/write
//!   set plus response) must agree byte for byte.
//! * **Order**: endorsed envelopes queue at a single orderer, which cuts
//!   blocks by size or timeout and stamps them.
//! * **Validate**: every organisation appends the block to its own ledger
//!   replica, checking the endorsement policy and MVCC read versions. All
//!   replicas must produce the same block hash.
//!
//! Private data written during simulation is held aside and delivered to
//! member organisations only if its transaction commits valid.

mod config;
mod context;
mod orderer;
mod pdc;
mod trace;

use std::collections::{HashMap, HashSet};
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use parking_lot::{Mutex, RwLock};

pub use config::{ClockMode, CollectionConfig, EndorsementPolicy, NetworkConfig, DEFAULT_ORGS};
pub use context::{Chaincode, Proposal, SimulationResult, Transient, TxContext};
pub use orderer::{BlockClock, BlockCutPolicy, Orderer};
pub use pdc::{digest_key, PdcError, PrivateRead, PrivateRecord, PrivateStore, PDC_KEY_PREFIX};
pub use trace::{Stage, TraceEvent, TraceLog};

use crate::digest::Digest;
use crate::ledger::{Block, Endorsement, InvalidReason, Ledger, LedgerError, TransactionEnvelope, TxHeader, Validity};

#[derive(Debug, thiserror::Error)]
pub enum TxFlowError {
    #[error("invalid network configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("replicas diverged at height {height}")]
    Divergence { height: u64 },
    #[error("unknown organisation `{0}`")]
    UnknownOrg(String),
}

#[derive(Debug, thiserror::Error)]
pub enum SubmitError<E: std::error::Error + 'static> {
    #[error("unknown operation `{0}`")]
    UnknownOperation(String),
    #[error("endorsement policy unsatisfied: {online} organisations online, {required} required")]
    PolicyUnsatisfied { online: usize, required: usize },
    #[error("endorsers produced different results (nondeterministic operation)")]
    EndorsementMismatch,
    #[error(transparent)]
    Chaincode(E),
}

/// A peer organisation: a full ledger replica plus its private data.
#[derive(Debug)]
pub struct PeerOrg {
    pub org_id: String,
    pub ledger: Ledger,
    pub private: PrivateStore,
}

/// Result of the execute phase for one proposal.
#[derive(Debug, Clone)]
pub struct Endorsed {
    pub envelope: TransactionEnvelope,
    pub private_writes: Vec<PrivateRecord>,
}

impl Endorsed {
    pub fn tx_id(&self) -> Digest {
        self.envelope.tx_id
    }

    pub fn response(&self) -> &[u8] {
        &self.envelope.response
    }
}

pub struct Network<C: Chaincode> {
    config: NetworkConfig,
    chaincode: C,
    orgs: Vec<RwLock<PeerOrg>>,
    online: Vec<AtomicBool>,
    /// Held shared while simulating, exclusively while committing, so
    /// endorsers always see the same committed height.
    gate: RwLock<()>,
    orderer: Mutex<Orderer>,
    pending_private: Mutex<HashMap<Digest, Vec<PrivateRecord>>>,
    clock: BlockClock,
    trace: TraceLog,
    data_dir: Option<PathBuf>,
}

impl<C: Chaincode> std::fmt::Debug for Network<C> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Network").field("orgs", &self.config.orgs).field("height", &self.height()).finish()
    }
}

impl<C: Chaincode> Network<C> {
    /// An in-memory network with a fresh genesis block on every replica.
    pub fn new(config: NetworkConfig, chaincode: C) -> Result<Self, TxFlowError> {
        config.validate().map_err(TxFlowError::Config)?;
        let clock = BlockClock::new(config.clock);
        let genesis_ts = clock.stamp(0, 0);
        let orgs = config
            .orgs
            .iter()
            .map(|id| {
                RwLock::new(PeerOrg {
                    org_id: id.clone(),
                    ledger: Ledger::with_genesis(genesis_ts),
                    private: PrivateStore::new(),
                })
            })
            .collect();
        Ok(Self::assemble(config, chaincode, orgs, clock, TraceLog::new(), None))
    }

    /// A network persisted under `dir/<org>/` (block log and private data).
    /// Existing logs are replayed; replicas must agree after replay.
    pub fn open(config: NetworkConfig, chaincode: C, dir: impl AsRef<Path>) -> Result<Self, TxFlowError> {
        config.validate().map_err(TxFlowError::Config)?;
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let clock = BlockClock::new(config.clock);
        let genesis_ts = clock.stamp(0, 0);
        let check = endorsement_check(&config);
        let mut orgs = Vec::with_capacity(config.orgs.len());
        for id in &config.orgs {
            let org_dir = dir.join(id);
            std::fs::create_dir_all(&org_dir)?;
            let ledger = Ledger::open(org_dir.join("blocks.log"), genesis_ts, &check)?;
            let private = PrivateStore::open(org_dir.join("private.jsonl"))?;
            orgs.push(RwLock::new(PeerOrg { org_id: id.clone(), ledger, private }));
        }
        let heads: HashSet<_> = orgs.iter().map(|o| o.read().ledger.blocks().last().map(|b| b.block_hash)).collect();
        if heads.len() > 1 {
            let height = orgs.iter().filter_map(|o| o.read().ledger.height()).min().unwrap_or(0);
            return Err(TxFlowError::Divergence { height });
        }
        drop(check);
        let trace = TraceLog::to_file(dir.join("trace.log"))?;
        Ok(Self::assemble(config, chaincode, orgs, clock, trace, Some(dir.to_path_buf())))
    }

    fn assemble(
        config: NetworkConfig,
        chaincode: C,
        orgs: Vec<RwLock<PeerOrg>>,
        clock: BlockClock,
        trace: TraceLog,
        data_dir: Option<PathBuf>,
    ) -> Self {
        let policy = BlockCutPolicy { max_txs: config.block_max_txs, timeout: config.block_timeout };
        Self {
            online: config.orgs.iter().map(|_| AtomicBool::new(true)).collect(),
            orgs,
            gate: RwLock::new(()),
            orderer: Mutex::new(Orderer::new(policy)),
            pending_private: Mutex::new(HashMap::new()),
            clock,
            trace,
            data_dir,
            chaincode,
            config,
        }
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn chaincode(&self) -> &C {
        &self.chaincode
    }

    pub fn data_dir(&self) -> Option<&Path> {
        self.data_dir.as_deref()
    }

    pub fn trace(&self) -> &TraceLog {
        &self.trace
    }

    fn org_index(&self, org: &str) -> Result<usize, TxFlowError> {
        self.config.orgs.iter().position(|o| o == org).ok_or_else(|| TxFlowError::UnknownOrg(org.to_owned()))
    }

    /// Marks an organisation reachable or not for endorsement.
    pub fn set_online(&self, org: &str, online: bool) -> Result<(), TxFlowError> {
        let i = self.org_index(org)?;
        self.online[i].store(online, Ordering::SeqCst);
        Ok(())
    }

    /// Simulates `proposal` on one organisation without endorsing it.
    pub fn simulate_on(&self, org_index: usize, proposal: &Proposal) -> Result<(Vec<u8>, SimulationResult), C::Error> {
        let tx_id = header_of(proposal).tx_id();
        let _gate = self.gate.read();
        let org = self.orgs[org_index].read();
        self.run(&org, tx_id, proposal)
    }

    fn run(&self, org: &PeerOrg, tx_id: Digest, proposal: &Proposal) -> Result<(Vec<u8>, SimulationResult), C::Error> {
        let mut ctx =
            TxContext::new(tx_id, proposal, &org.org_id, org.ledger.state(), &org.private, &self.config.collections);
        let response = self.chaincode.invoke(&mut ctx, &proposal.operation)?;
        Ok((response, ctx.finish()))
    }

    /// Execute phase: simulate on `E` endorsers and compare results.
    pub fn endorse(&self, proposal: &Proposal) -> Result<Endorsed, SubmitError<C::Error>> {
        if !self.chaincode.has_operation(&proposal.operation.name) {
            return Err(SubmitError::UnknownOperation(proposal.operation.name.clone()));
        }
        let required = self.config.endorsement.required;
        let endorsers: Vec<usize> =
            (0..self.orgs.len()).filter(|&i| self.online[i].load(Ordering::SeqCst)).take(required).collect();
        if endorsers.len() < required {
            let online = self.online.iter().filter(|o| o.load(Ordering::SeqCst)).count();
            return Err(SubmitError::PolicyUnsatisfied { online, required });
        }

        let header = header_of(proposal);
        let tx_id = header.tx_id();
        let _gate = self.gate.read();
        let mut agreed: Option<(Vec<u8>, SimulationResult, Digest)> = None;
        let mut endorsements = Vec::with_capacity(required);
        for &i in &endorsers {
            let org = self.orgs[i].read();
            let (response, sim) = self.run(&org, tx_id, proposal).map_err(|e| {
                self.trace.record(tx_id, Stage::Rejected { reason: e.to_string() });
                SubmitError::Chaincode(e)
            })?;
            let digest = sim.rwset.endorsement_digest(&response);
            match &agreed {
                None => agreed = Some((response, sim, digest)),
                Some((_, first_sim, first)) => {
                    if *first != digest || first_sim.private_writes != sim.private_writes {
                        self.trace.record(tx_id, Stage::Rejected { reason: "endorsement mismatch".into() });
                        return Err(SubmitError::EndorsementMismatch);
                    }
                }
            }
            endorsements.push(Endorsement { org_id: org.org_id.clone(), result_digest: digest });
        }
        let (response, sim, _) = agreed.expect("at least one endorser");
        self.trace.record(tx_id, Stage::Endorsed { orgs: endorsements.iter().map(|e| e.org_id.clone()).collect() });
        Ok(Endorsed {
            envelope: TransactionEnvelope {
                tx_id,
                header,
                rwset: sim.rwset,
                response,
                endorsements,
                validity: Validity::Pending,
            },
            private_writes: sim.private_writes,
        })
    }

    /// Hands an endorsed transaction to the orderer.
    pub fn enqueue(&self, endorsed: Endorsed) {
        let tx_id = endorsed.envelope.tx_id;
        if !endorsed.private_writes.is_empty() {
            self.pending_private.lock().insert(tx_id, endorsed.private_writes);
        }
        self.orderer.lock().enqueue(endorsed.envelope, Instant::now());
    }

    /// Endorse then enqueue. Returns the endorsed transaction.
    pub fn submit(&self, proposal: &Proposal) -> Result<(Digest, Vec<u8>), SubmitError<C::Error>> {
        let endorsed = self.endorse(proposal)?;
        let out = (endorsed.tx_id(), endorsed.envelope.response.clone());
        self.enqueue(endorsed);
        Ok(out)
    }

    pub fn queued(&self) -> usize {
        self.orderer.lock().len()
    }

    pub fn cut_due(&self, now: Instant) -> bool {
        self.orderer.lock().cut_due(now)
    }

    pub fn next_deadline(&self) -> Option<Instant> {
        self.orderer.lock().deadline()
    }

    /// Order and validate phases: cuts one block from the queue and commits
    /// it on every replica. Returns `None` when nothing is queued.
    pub fn order_and_commit(&self) -> Result<Option<Block>, TxFlowError> {
        let _gate = self.gate.write();
        let txs = self.orderer.lock().cut();
        if txs.is_empty() {
            return Ok(None);
        }
        let (height, prev_ts) = {
            let first = self.orgs[0].read();
            let last = first.ledger.blocks().last().ok_or(LedgerError::ChainNotInitialized)?;
            (last.height + 1, last.timestamp_ms)
        };
        for (i, tx) in txs.iter().enumerate() {
            self.trace.record(tx.tx_id, Stage::Ordered { height, index: i as u32 });
        }
        let timestamp = self.clock.stamp(height, prev_ts);
        let check = endorsement_check(&self.config);

        let mut committed: Option<Block> = None;
        for org in &self.orgs {
            let mut org = org.write();
            let block = org.ledger.append_block_checked(txs.clone(), timestamp, &check)?;
            match &committed {
                None => committed = Some(block.clone()),
                Some(b) if b.block_hash != block.block_hash => return Err(TxFlowError::Divergence { height }),
                Some(_) => {}
            }
        }
        let block = committed.expect("at least one organisation");

        let mut pending = self.pending_private.lock();
        for tx in &block.txs {
            let private = pending.remove(&tx.tx_id);
            self.trace.record(tx.tx_id, Stage::Committed { height, validity: tx.validity });
            if !tx.validity.is_valid() {
                continue;
            }
            for record in private.into_iter().flatten() {
                let Some(collection) = self.config.collection(&record.collection) else { continue };
                for org in &self.orgs {
                    let mut org = org.write();
                    if collection.is_member(&org.org_id) {
                        org.private.put(&record)?;
                    }
                }
            }
        }
        Ok(Some(block))
    }

    /// Commits until the orderer queue is empty, returning the blocks cut.
    pub fn flush(&self) -> Result<Vec<Block>, TxFlowError> {
        let mut blocks = Vec::new();
        while let Some(b) = self.order_and_commit()? {
            blocks.push(b);
        }
        Ok(blocks)
    }

    /// Read access to one organisation's replica.
    pub fn with_org<R>(&self, org_index: usize, f: impl FnOnce(&PeerOrg) -> R) -> R {
        f(&self.orgs[org_index].read())
    }

    /// Read access to the first organisation's ledger (all replicas agree).
    pub fn with_ledger<R>(&self, f: impl FnOnce(&Ledger) -> R) -> R {
        f(&self.orgs[0].read().ledger)
    }

    pub fn height(&self) -> u64 {
        self.with_ledger(|l| l.height().unwrap_or(0))
    }

    /// World-state snapshot digest of every replica, in organisation order.
    pub fn state_digests(&self) -> Vec<Digest> {
        let _gate = self.gate.read();
        self.orgs.iter().map(|o| o.read().ledger.state().snapshot_digest()).collect()
    }

    /// Reads a private value as `org` would: members see the value,
    /// non-members the on-ledger digest only.
    pub fn pdc_get(&self, collection: &str, key: &str, org: &str) -> Result<PrivateRead, PdcError> {
        let c = self.config.collection(collection).ok_or_else(|| PdcError::UnknownCollection(collection.into()))?;
        let i = self.org_index(org).map_err(|_| PdcError::NotAMember { org: org.into(), collection: collection.into() })?;
        let org_guard = self.orgs[i].read();
        let digest = org_guard
            .ledger
            .state_get(&digest_key(collection, key))
            .and_then(|(b, _)| std::str::from_utf8(b).ok().and_then(|s| Digest::from_hex(s).ok()));
        let Some(digest) = digest else {
            return Ok(PrivateRead::Absent);
        };
        if c.is_member(org) {
            if let Some(v) = org_guard.private.get(collection, key) {
                return Ok(PrivateRead::Value(v.to_vec()));
            }
        }
        Ok(PrivateRead::DigestOnly(digest))
    }

    /// Overwrites a private value on one organisation without updating its
    /// digest. Test hook for reveal-mismatch scenarios.
    #[doc(hidden)]
    pub fn tamper_private(&self, org: &str, collection: &str, key: &str, value: Vec<u8>) -> Result<(), TxFlowError> {
        let i = self.org_index(org)?;
        self.orgs[i].write().private.overwrite_unchecked(collection, key, value);
        Ok(())
    }
}

fn header_of(p: &Proposal) -> TxHeader {
    TxHeader { submitter: p.submitter.clone(), operation: p.operation.clone(), nonce: p.nonce }
}

/// Validation-time endorsement policy check: at least `E` distinct known
/// organisations, each attesting to the envelope's actual result.
pub fn endorsement_check(config: &NetworkConfig) -> impl Fn(&TransactionEnvelope) -> Option<InvalidReason> + '_ {
    move |tx| {
        let expected = tx.rwset.endorsement_digest(&tx.response);
        let mut orgs = HashSet::new();
        for e in &tx.endorsements {
            if e.result_digest != expected || !config.orgs.contains(&e.org_id) {
                return Some(InvalidReason::EndorsementPolicyFailure);
            }
            orgs.insert(e.org_id.as_str());
        }
        (orgs.len() < config.endorsement.required).then_some(InvalidReason::EndorsementPolicyFailure)
    }
}
