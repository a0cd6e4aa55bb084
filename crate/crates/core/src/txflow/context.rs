use std::collections::BTreeMap;

use super::config::CollectionConfig;
use super::pdc::{digest_key, PdcError, PrivateRead, PrivateRecord, PrivateStore};
use crate::digest::Digest;
use crate::ledger::{Operation, ReadEntry, RwSet, Submitter, Version, WorldState, WriteEntry, WriteValue};

/// Off-ledger inputs passed to simulation only (never recorded on-chain).
pub type Transient = BTreeMap<String, Vec<u8>>;

/// A client's request to run one chaincode operation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Proposal {
    pub submitter: Submitter,
    pub operation: Operation,
    pub nonce: u64,
    pub transient: Transient,
}

impl Proposal {
    pub fn new(submitter: Submitter, operation: Operation, nonce: u64) -> Self {
        Self { submitter, operation, nonce, transient: Transient::new() }
    }

    pub fn with_transient(mut self, key: impl Into<String>, value: impl Into<Vec<u8>>) -> Self {
        self.transient.insert(key.into(), value.into());
        self
    }
}

/// Application logic executed under the transaction lifecycle.
///
/// Implementations must be deterministic: every endorsing organisation
/// simulates independently and the results are compared byte for byte.
pub trait Chaincode: Send + Sync + 'static {
    type Error: std::error::Error + Send + Sync + 'static;

    fn has_operation(&self, name: &str) -> bool;

    /// Runs `op` against the committed state visible through `ctx`,
    /// returning the response payload.
    fn invoke(&self, ctx: &mut TxContext<'_>, op: &Operation) -> Result<Vec<u8>, Self::Error>;
}

/// Simulation context handed to chaincode. Records the read set and buffers
/// writes; nothing touches committed state.
pub struct TxContext<'a> {
    tx_id: Digest,
    submitter: &'a Submitter,
    transient: &'a Transient,
    org_id: &'a str,
    state: &'a WorldState,
    private: &'a PrivateStore,
    collections: &'a [CollectionConfig],
    reads: BTreeMap<String, Option<Version>>,
    writes: BTreeMap<String, WriteValue>,
    private_writes: BTreeMap<(String, String), Vec<u8>>,
}

/// Everything a simulation produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulationResult {
    pub rwset: RwSet,
    pub private_writes: Vec<PrivateRecord>,
}

impl<'a> TxContext<'a> {
    pub(crate) fn new(
        tx_id: Digest,
        proposal: &'a Proposal,
        org_id: &'a str,
        state: &'a WorldState,
        private: &'a PrivateStore,
        collections: &'a [CollectionConfig],
    ) -> Self {
        Self {
            tx_id,
            submitter: &proposal.submitter,
            transient: &proposal.transient,
            org_id,
            state,
            private,
            collections,
            reads: BTreeMap::new(),
            writes: BTreeMap::new(),
            private_writes: BTreeMap::new(),
        }
    }

    pub fn tx_id(&self) -> Digest {
        self.tx_id
    }

    pub fn submitter(&self) -> &Submitter {
        self.submitter
    }

    /// The organisation running this simulation.
    pub fn org_id(&self) -> &str {
        self.org_id
    }

    pub fn transient(&self, key: &str) -> Option<&[u8]> {
        self.transient.get(key).map(Vec::as_slice)
    }

    /// Reads a key, seeing this transaction's own pending writes first.
    pub fn get_state(&mut self, key: &str) -> Option<Vec<u8>> {
        if let Some(w) = self.writes.get(key) {
            return match w {
                WriteValue::Put(v) => Some(v.clone()),
                WriteValue::Delete => None,
            };
        }
        self.reads.entry(key.to_owned()).or_insert_with(|| self.state.version_of(key));
        self.state.get(key).map(|(v, _)| v.to_vec())
    }

    pub fn put_state(&mut self, key: impl Into<String>, value: Vec<u8>) {
        self.writes.insert(key.into(), WriteValue::Put(value));
    }

    pub fn del_state(&mut self, key: impl Into<String>) {
        self.writes.insert(key.into(), WriteValue::Delete);
    }

    fn collection(&self, name: &str) -> Result<&'a CollectionConfig, PdcError> {
        self.collections
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| PdcError::UnknownCollection(name.to_owned()))
    }

    /// Stores a private value for member organisations and writes its digest
    /// into the public write set. The submitter's organisation must be a
    /// member of the collection.
    pub fn put_private(&mut self, collection: &str, key: &str, value: Vec<u8>) -> Result<Digest, PdcError> {
        let c = self.collection(collection)?;
        if !c.is_member(&self.submitter.org) {
            return Err(PdcError::NotAMember { org: self.submitter.org.clone(), collection: collection.to_owned() });
        }
        let digest = Digest::of(&value);
        self.put_state(digest_key(collection, key), digest.to_hex().into_bytes());
        self.private_writes.insert((collection.to_owned(), key.to_owned()), value);
        Ok(digest)
    }

    /// The committed (or pending) digest of a private value.
    pub fn private_digest(&mut self, collection: &str, key: &str) -> Result<Option<Digest>, PdcError> {
        self.collection(collection)?;
        Ok(self
            .get_state(&digest_key(collection, key))
            .and_then(|b| std::str::from_utf8(&b).ok().and_then(|s| Digest::from_hex(s).ok())))
    }

    /// Reads a private value as the simulating organisation: members see the
    /// value, non-members only the digest.
    pub fn get_private(&mut self, collection: &str, key: &str) -> Result<PrivateRead, PdcError> {
        let c = self.collection(collection)?;
        if let Some(v) = self.private_writes.get(&(collection.to_owned(), key.to_owned())) {
            return Ok(PrivateRead::Value(v.clone()));
        }
        let Some(digest) = self.private_digest(collection, key)? else {
            return Ok(PrivateRead::Absent);
        };
        if c.is_member(self.org_id) {
            if let Some(v) = self.private.get(collection, key) {
                return Ok(PrivateRead::Value(v.to_vec()));
            }
        }
        Ok(PrivateRead::DigestOnly(digest))
    }

    pub(crate) fn finish(self) -> SimulationResult {
        SimulationResult {
            rwset: RwSet {
                reads: self.reads.into_iter().map(|(key, version)| ReadEntry { key, version }).collect(),
                writes: self.writes.into_iter().map(|(key, value)| WriteEntry { key, value }).collect(),
            },
            private_writes: self
                .private_writes
                .into_iter()
                .map(|((collection, key), value)| PrivateRecord::new(collection, key, value))
                .collect(),
        }
    }
}
