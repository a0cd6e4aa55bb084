//! The fact-checking network wired together: chaincode, replicas, block
//! cutting and commit notification.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use parking_lot::Mutex;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::de::DeserializeOwned;
use tokio::sync::{oneshot, Notify};

use crate::config::AppConfig;
use crate::factcheck::{
    ops, transient, ContentFormat, FactCheckChaincode, FactCheckError, Verdict, SALT_LEN,
};
use crate::ledger::{Block, InvalidReason, Ledger, Operation, Submitter, TxLocation, Validity};
use crate::scoring::{CueLexicon, LexiconScorer, Scorer};
use crate::txflow::{Network, Proposal, SubmitError, TxFlowError};
use crate::Digest;

#[derive(Debug, thiserror::Error)]
pub enum PlatformError {
    #[error(transparent)]
    Domain(#[from] FactCheckError),
    #[error("transaction {tx_id} invalidated: {reason:?}")]
    Invalidated { tx_id: Digest, reason: InvalidReason },
    #[error("unknown operation `{0}`")]
    UnknownOperation(String),
    #[error("endorsement failed: {0}")]
    Endorsement(String),
    #[error(transparent)]
    Network(#[from] TxFlowError),
    #[error("the orderer stopped before the transaction committed")]
    Stopped,
    #[error("{0}")]
    Setup(String),
}

impl From<SubmitError<FactCheckError>> for PlatformError {
    fn from(e: SubmitError<FactCheckError>) -> Self {
        match e {
            SubmitError::Chaincode(e) => PlatformError::Domain(e),
            SubmitError::UnknownOperation(op) => PlatformError::UnknownOperation(op),
            other => PlatformError::Endorsement(other.to_string()),
        }
    }
}

/// A transaction that committed valid.
#[derive(Debug, Clone, PartialEq)]
pub struct Committed<T> {
    pub tx_id: Digest,
    pub location: TxLocation,
    pub response: T,
}

#[derive(Debug, Clone, Copy)]
struct Outcome {
    location: TxLocation,
    validity: Validity,
}

type Waiters = HashMap<Digest, oneshot::Sender<Outcome>>;

pub struct Platform {
    network: Network<FactCheckChaincode>,
    threshold: f64,
    rng: Mutex<ChaCha20Rng>,
    waiters: Mutex<Waiters>,
    wake: Notify,
}

impl std::fmt::Debug for Platform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Platform").field("network", &self.network).finish_non_exhaustive()
    }
}

impl Platform {
    pub fn new(network: Network<FactCheckChaincode>, threshold: f64, seed: Option<u64>) -> Self {
        let rng = match seed {
            Some(s) => ChaCha20Rng::seed_from_u64(s),
            None => ChaCha20Rng::from_os_rng(),
        };
        Self { network, threshold, rng: Mutex::new(rng), waiters: Mutex::new(HashMap::new()), wake: Notify::new() }
    }

    /// Builds the chaincode and network described by `config`, persisted
    /// under its data directory when one is set.
    pub fn from_config(config: &AppConfig) -> Result<Self, PlatformError> {
        let lexicon = match &config.lexicon {
            Some(p) => CueLexicon::load(p).map_err(|e| PlatformError::Setup(format!("{}: {e}", p.display())))?,
            None => CueLexicon::default_lexicon(),
        };
        let scorer: Arc<dyn Scorer> = Arc::new(LexiconScorer::new(lexicon));
        Self::with_scorer(config, scorer, config.data_dir.as_deref())
    }

    pub fn with_scorer(config: &AppConfig, scorer: Arc<dyn Scorer>, dir: Option<&Path>) -> Result<Self, PlatformError> {
        let chaincode = FactCheckChaincode::new(config.policy, scorer).map_err(PlatformError::Setup)?;
        let network = match dir {
            Some(d) => Network::open(config.network.clone(), chaincode, d)?,
            None => Network::new(config.network.clone(), chaincode)?,
        };
        Ok(Self::new(network, config.threshold, config.seed))
    }

    pub fn network(&self) -> &Network<FactCheckChaincode> {
        &self.network
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn with_ledger<R>(&self, f: impl FnOnce(&Ledger) -> R) -> R {
        self.network.with_ledger(f)
    }

    pub fn random_bytes<const N: usize>(&self) -> [u8; N] {
        let mut out = [0u8; N];
        self.rng.lock().fill_bytes(&mut out);
        out
    }

    fn proposal(&self, submitter: Submitter, operation: Operation) -> Proposal {
        let nonce = self.rng.lock().random::<u64>();
        Proposal::new(submitter, operation, nonce)
    }

    /// Endorses and enqueues; the returned receiver fires on commit.
    fn submit(&self, proposal: &Proposal) -> Result<(Digest, oneshot::Receiver<Outcome>), PlatformError> {
        let endorsed = self.network.endorse(proposal)?;
        let tx_id = endorsed.tx_id();
        let (tx, rx) = oneshot::channel();
        self.waiters.lock().insert(tx_id, tx);
        self.network.enqueue(endorsed);
        // The orderer re-reads the queue deadline or cuts a full block.
        self.wake.notify_one();
        Ok((tx_id, rx))
    }

    fn settle<T: DeserializeOwned>(&self, tx_id: Digest, outcome: Outcome) -> Result<Committed<T>, PlatformError> {
        match outcome.validity {
            Validity::Valid => {}
            Validity::Invalid(reason) => return Err(PlatformError::Invalidated { tx_id, reason }),
            Validity::Pending => return Err(PlatformError::Stopped),
        }
        let response = self.with_ledger(|l| {
            l.get_transaction(&tx_id).map(|(tx, _)| serde_json::from_slice::<T>(&tx.response))
        });
        match response {
            Ok(Ok(response)) => Ok(Committed { tx_id, location: outcome.location, response }),
            Ok(Err(e)) => Err(PlatformError::Setup(format!("undecodable response: {e}"))),
            Err(e) => Err(PlatformError::Network(e.into())),
        }
    }

    /// Runs `proposal` through the full lifecycle and waits for commit. An
    /// orderer task ([`Platform::run_orderer`]) must be running.
    pub async fn execute_proposal<T: DeserializeOwned>(&self, proposal: Proposal) -> Result<Committed<T>, PlatformError> {
        let (tx_id, rx) = self.submit(&proposal)?;
        let outcome = rx.await.map_err(|_| PlatformError::Stopped)?;
        self.settle(tx_id, outcome)
    }

    pub async fn execute<T: DeserializeOwned>(
        &self,
        submitter: Submitter,
        operation: Operation,
    ) -> Result<Committed<T>, PlatformError> {
        self.execute_proposal(self.proposal(submitter, operation)).await
    }

    /// Synchronous variant: submits, cuts blocks until the queue drains and
    /// returns the outcome. For use without an orderer task.
    pub fn execute_now<T: DeserializeOwned>(&self, proposal: Proposal) -> Result<Committed<T>, PlatformError> {
        let (tx_id, mut rx) = self.submit(&proposal)?;
        while self.commit_next()?.is_some() {}
        let outcome = rx.try_recv().map_err(|_| PlatformError::Stopped)?;
        self.settle(tx_id, outcome)
    }

    /// Cuts and commits one block, notifying the waiters of its transactions.
    pub fn commit_next(&self) -> Result<Option<Block>, PlatformError> {
        let block = self.network.order_and_commit();
        let block = match block {
            Ok(b) => b,
            Err(e) => {
                // Nothing waiting can commit after a replica failure.
                self.waiters.lock().clear();
                return Err(e.into());
            }
        };
        if let Some(b) = &block {
            let mut waiters = self.waiters.lock();
            for (i, tx) in b.txs.iter().enumerate() {
                if let Some(w) = waiters.remove(&tx.tx_id) {
                    let location = TxLocation { height: b.height, tx_index: i as u32 };
                    let _ = w.send(Outcome { location, validity: tx.validity });
                }
            }
        }
        Ok(block)
    }

    /// Cuts blocks whenever the size or timeout rule fires, until `stop`
    /// resolves. Remaining queued transactions are committed on exit.
    pub async fn run_orderer(self: Arc<Self>, stop: impl std::future::Future<Output = ()>) {
        tokio::pin!(stop);
        loop {
            let sleep_for = self
                .network
                .next_deadline()
                .map(|d| d.saturating_duration_since(Instant::now()))
                .unwrap_or(Duration::from_secs(3600));
            tokio::select! {
                _ = &mut stop => break,
                _ = self.wake.notified() => {}
                _ = tokio::time::sleep(sleep_for) => {}
            }
            while self.network.cut_due(Instant::now()) {
                let me = self.clone();
                match tokio::task::spawn_blocking(move || me.commit_next()).await {
                    Ok(Ok(_)) => {}
                    Ok(Err(e)) => {
                        tracing::error!(error = %e, "block commit failed");
                        break;
                    }
                    Err(e) => {
                        tracing::error!(error = %e, "commit task panicked");
                        break;
                    }
                }
            }
        }
        let me = self.clone();
        let _ = tokio::task::spawn_blocking(move || while let Ok(Some(_)) = me.commit_next() {}).await;
    }

    /// Proposal for a sealed vote: verdict, rationale and a fresh salt go in
    /// the transient map only.
    pub fn vote_proposal(&self, checker: Submitter, news_id: &Digest, verdict: Verdict, rationale: &str) -> Proposal {
        let salt: [u8; SALT_LEN] = self.random_bytes();
        self.proposal(checker, Operation::new(ops::CAST_VOTE).arg("news_id", news_id.to_hex()))
            .with_transient(transient::VERDICT, verdict.as_str())
            .with_transient(transient::RATIONALE, rationale)
            .with_transient(transient::SALT, salt.to_vec())
    }

    pub fn register_proposal(
        &self,
        submitter: Submitter,
        content: &str,
        format: ContentFormat,
        created_at: &str,
        author: &str,
        platform: &str,
    ) -> Proposal {
        self.proposal(
            submitter,
            Operation::new(ops::REGISTER_NEWS)
                .arg("content", content)
                .arg("format", format.tag())
                .arg("created_at", created_at)
                .arg("author", author)
                .arg("platform", platform),
        )
    }

    pub fn operation_proposal(&self, submitter: Submitter, operation: Operation) -> Proposal {
        self.proposal(submitter, operation)
    }
}
