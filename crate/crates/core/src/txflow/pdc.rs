//! Private data collections: values held only by member organisations, with
//! their SHA-256 digest written on-ledger under `pdc/<collection>/<key>`.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::digest::Digest;

pub const PDC_KEY_PREFIX: &str = "pdc/";

pub fn digest_key(collection: &str, key: &str) -> String {
    format!("{PDC_KEY_PREFIX}{collection}/{key}")
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PdcError {
    #[error("unknown collection `{0}`")]
    UnknownCollection(String),
    #[error("organisation `{org}` is not a member of collection `{collection}`")]
    NotAMember { org: String, collection: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrivateRecord {
    pub collection: String,
    pub key: String,
    #[serde(with = "crate::ledger::hex_bytes")]
    pub value: Vec<u8>,
    pub digest: Digest,
}

impl PrivateRecord {
    pub fn new(collection: impl Into<String>, key: impl Into<String>, value: Vec<u8>) -> Self {
        let digest = Digest::of(&value);
        Self { collection: collection.into(), key: key.into(), value, digest }
    }
}

/// What an organisation sees when reading a private key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrivateRead {
    Value(Vec<u8>),
    /// The caller is not a member (or lacks the value); only the on-ledger
    /// digest is visible.
    DigestOnly(Digest),
    Absent,
}

/// One organisation's private data, optionally backed by an append-only
/// JSON-lines file.
#[derive(Debug, Default)]
pub struct PrivateStore {
    data: BTreeMap<(String, String), Vec<u8>>,
    log: Option<File>,
}

impl PrivateStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn open(path: impl AsRef<Path>) -> io::Result<Self> {
        let path = path.as_ref();
        let mut data = BTreeMap::new();
        if path.exists() {
            for line in BufReader::new(File::open(path)?).lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: PrivateRecord =
                    serde_json::from_str(&line).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
                data.insert((rec.collection, rec.key), rec.value);
            }
        }
        let log = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { data, log: Some(log) })
    }

    pub fn get(&self, collection: &str, key: &str) -> Option<&[u8]> {
        self.data.get(&(collection.to_owned(), key.to_owned())).map(Vec::as_slice)
    }

    pub fn put(&mut self, record: &PrivateRecord) -> io::Result<()> {
        if let Some(log) = self.log.as_mut() {
            let mut line = serde_json::to_string(record).expect("record serializes");
            line.push('\n');
            log.write_all(line.as_bytes())?;
        }
        self.data.insert((record.collection.clone(), record.key.clone()), record.value.clone());
        Ok(())
    }

    /// Overwrites a value without touching the on-ledger digest. Test hook
    /// for simulating a tampered store.
    #[doc(hidden)]
    pub fn overwrite_unchecked(&mut self, collection: &str, key: &str, value: Vec<u8>) {
        self.data.insert((collection.to_owned(), key.to_owned()), value);
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}
