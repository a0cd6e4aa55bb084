use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::codec::{DecodeError, Decoder, Encoder};
use crate::digest::Digest;

/// Commit position of a write: `(block height, tx index within block)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Version {
    pub height: u64,
    pub tx_index: u32,
}

impl Version {
    pub fn new(height: u64, tx_index: u32) -> Self {
        Self { height, tx_index }
    }
}

impl fmt::Display for Version {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.height, self.tx_index)
    }
}

/// Location of a committed transaction.
pub type TxLocation = Version;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    FactChecker,
    Curator,
    System,
}

impl Role {
    fn tag(self) -> u8 {
        match self {
            Role::FactChecker => 0,
            Role::Curator => 1,
            Role::System => 2,
        }
    }

    fn from_tag(tag: u8) -> Option<Self> {
        Some(match tag {
            0 => Role::FactChecker,
            1 => Role::Curator,
            2 => Role::System,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::FactChecker => "fact_checker",
            Role::Curator => "curator",
            Role::System => "system",
        }
    }
}

/// Authenticated identity that submitted a transaction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Submitter {
    pub id: String,
    pub org: String,
    pub role: Role,
}

impl Submitter {
    pub fn new(id: impl Into<String>, org: impl Into<String>, role: Role) -> Self {
        Self { id: id.into(), org: org.into(), role }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Operation {
    pub name: String,
    pub args: BTreeMap<String, String>,
}

impl Operation {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), args: BTreeMap::new() }
    }

    pub fn arg(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.args.insert(key.into(), value.into());
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.args.get(key).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WriteValue {
    Put(#[serde(with = "hex_bytes")] Vec<u8>),
    Delete,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadEntry {
    pub key: String,
    /// `None` when the key had never been written at simulation time.
    pub version: Option<Version>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WriteEntry {
    pub key: String,
    pub value: WriteValue,
}

/// Read and write sets produced by simulating one transaction.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RwSet {
    pub reads: Vec<ReadEntry>,
    pub writes: Vec<WriteEntry>,
}

impl RwSet {
    pub fn encode_into(&self, e: &mut Encoder) {
        e.len(self.reads.len());
        for r in &self.reads {
            e.str(&r.key);
            match r.version {
                None => {
                    e.u8(0);
                }
                Some(v) => {
                    e.u8(1).u64(v.height).u32(v.tx_index);
                }
            }
        }
        e.len(self.writes.len());
        for w in &self.writes {
            e.str(&w.key);
            match &w.value {
                WriteValue::Put(bytes) => {
                    e.u8(0).bytes(bytes);
                }
                WriteValue::Delete => {
                    e.u8(1);
                }
            }
        }
    }

    fn decode_from(d: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        let n = d.count(5)?;
        let mut reads = Vec::with_capacity(n);
        for _ in 0..n {
            let key = d.string()?;
            let version = match d.u8()? {
                0 => None,
                1 => Some(Version::new(d.u64()?, d.u32()?)),
                t => return Err(d.tag_error("read version", t)),
            };
            reads.push(ReadEntry { key, version });
        }
        let n = d.count(5)?;
        let mut writes = Vec::with_capacity(n);
        for _ in 0..n {
            let key = d.string()?;
            let value = match d.u8()? {
                0 => WriteValue::Put(d.bytes()?.to_vec()),
                1 => WriteValue::Delete,
                t => return Err(d.tag_error("write kind", t)),
            };
            writes.push(WriteEntry { key, value });
        }
        Ok(RwSet { reads, writes })
    }

    /// Digest over the simulation result (rw-set plus chaincode response).
    /// Endorsers sign this value.
    pub fn endorsement_digest(&self, response: &[u8]) -> Digest {
        let mut e = Encoder::new();
        self.encode_into(&mut e);
        e.bytes(response);
        Digest::of(e.as_slice())
    }
}

/// An endorsing organisation's attestation of a simulation result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Endorsement {
    pub org_id: String,
    pub result_digest: Digest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum InvalidReason {
    MvccConflict,
    DuplicateTxId,
    EndorsementPolicyFailure,
}

impl InvalidReason {
    pub fn code(self) -> &'static str {
        match self {
            InvalidReason::MvccConflict => "MVCC_CONFLICT",
            InvalidReason::DuplicateTxId => "DUPLICATE_TXID",
            InvalidReason::EndorsementPolicyFailure => "ENDORSEMENT_POLICY_FAILURE",
        }
    }

    fn tag(self) -> u8 {
        match self {
            InvalidReason::MvccConflict => 0,
            InvalidReason::DuplicateTxId => 1,
            InvalidReason::EndorsementPolicyFailure => 2,
        }
    }

    fn from_tag(tag: u8) -> Option<Self> {
        Some(match tag {
            0 => InvalidReason::MvccConflict,
            1 => InvalidReason::DuplicateTxId,
            2 => InvalidReason::EndorsementPolicyFailure,
            _ => return None,
        })
    }
}

impl fmt::Display for InvalidReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum Validity {
    Pending,
    Valid,
    Invalid(InvalidReason),
}

impl Validity {
    pub fn is_valid(self) -> bool {
        self == Validity::Valid
    }
}

/// The part of a transaction that identifies it: who asked for what.
/// `tx_id` is the digest of its canonical bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxHeader {
    pub submitter: Submitter,
    pub operation: Operation,
    pub nonce: u64,
}

impl TxHeader {
    pub fn encode_into(&self, e: &mut Encoder) {
        e.str(&self.submitter.id).str(&self.submitter.org).u8(self.submitter.role.tag());
        e.str(&self.operation.name);
        e.len(self.operation.args.len());
        for (k, v) in &self.operation.args {
            e.str(k).str(v);
        }
        e.u64(self.nonce);
    }

    fn decode_from(d: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        let id = d.string()?;
        let org = d.string()?;
        let role_tag = d.u8()?;
        let role = Role::from_tag(role_tag).ok_or_else(|| d.tag_error("role", role_tag))?;
        let name = d.string()?;
        let n = d.count(8)?;
        let mut args = BTreeMap::new();
        for _ in 0..n {
            let k = d.string()?;
            let v = d.string()?;
            args.insert(k, v);
        }
        let nonce = d.u64()?;
        Ok(TxHeader { submitter: Submitter { id, org, role }, operation: Operation { name, args }, nonce })
    }

    pub fn tx_id(&self) -> Digest {
        let mut e = Encoder::new();
        self.encode_into(&mut e);
        Digest::of(e.as_slice())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactionEnvelope {
    pub tx_id: Digest,
    pub header: TxHeader,
    pub rwset: RwSet,
    /// Chaincode response bytes, covered by endorsements.
    #[serde(with = "hex_bytes")]
    pub response: Vec<u8>,
    pub endorsements: Vec<Endorsement>,
    pub validity: Validity,
}

impl TransactionEnvelope {
    pub fn submitter(&self) -> &Submitter {
        &self.header.submitter
    }

    pub fn operation(&self) -> &Operation {
        &self.header.operation
    }

    pub fn encode_into(&self, e: &mut Encoder) {
        e.digest(&self.tx_id);
        self.header.encode_into(e);
        self.rwset.encode_into(e);
        e.bytes(&self.response);
        e.len(self.endorsements.len());
        for en in &self.endorsements {
            e.str(&en.org_id).digest(&en.result_digest);
        }
        match self.validity {
            Validity::Pending => {
                e.u8(0);
            }
            Validity::Valid => {
                e.u8(1);
            }
            Validity::Invalid(r) => {
                e.u8(2).u8(r.tag());
            }
        }
    }

    pub fn decode_from(d: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        let tx_id = d.digest()?;
        let header = TxHeader::decode_from(d)?;
        let rwset = RwSet::decode_from(d)?;
        let response = d.bytes()?.to_vec();
        let n = d.count(36)?;
        let mut endorsements = Vec::with_capacity(n);
        for _ in 0..n {
            let org_id = d.string()?;
            let result_digest = d.digest()?;
            endorsements.push(Endorsement { org_id, result_digest });
        }
        let validity = match d.u8()? {
            0 => Validity::Pending,
            1 => Validity::Valid,
            2 => {
                let t = d.u8()?;
                Validity::Invalid(InvalidReason::from_tag(t).ok_or_else(|| d.tag_error("invalid reason", t))?)
            }
            t => return Err(d.tag_error("validity", t)),
        };
        Ok(TransactionEnvelope { tx_id, header, rwset, response, endorsements, validity })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub height: u64,
    pub prev_hash: Digest,
    pub timestamp_ms: u64,
    pub txs: Vec<TransactionEnvelope>,
    pub block_hash: Digest,
}

impl Block {
    /// Canonical bytes covered by `block_hash`: every field except the hash
    /// itself, validity flags included.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut e = Encoder::new();
        e.u64(self.height).digest(&self.prev_hash).u64(self.timestamp_ms);
        e.len(self.txs.len());
        for tx in &self.txs {
            tx.encode_into(&mut e);
        }
        e.finish()
    }

    pub fn compute_hash(&self) -> Digest {
        Digest::of(&self.canonical_bytes())
    }

    pub fn seal(height: u64, prev_hash: Digest, timestamp_ms: u64, txs: Vec<TransactionEnvelope>) -> Self {
        let mut b = Block { height, prev_hash, timestamp_ms, txs, block_hash: Digest::ZERO };
        b.block_hash = b.compute_hash();
        b
    }

    /// Decodes canonical bytes; `block_hash` is supplied by the caller.
    pub fn decode_canonical(bytes: &[u8], block_hash: Digest) -> Result<Self, DecodeError> {
        let mut d = Decoder::new(bytes);
        let height = d.u64()?;
        let prev_hash = d.digest()?;
        let timestamp_ms = d.u64()?;
        let n = d.count(64)?;
        let mut txs = Vec::with_capacity(n);
        for _ in 0..n {
            txs.push(TransactionEnvelope::decode_from(&mut d)?);
        }
        d.finish()?;
        Ok(Block { height, prev_hash, timestamp_ms, txs, block_hash })
    }
}

pub(crate) mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(s).map_err(serde::de::Error::custom)
    }
}
