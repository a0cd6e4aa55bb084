use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::types::{Version, WriteValue};
use crate::codec::Encoder;
use crate::digest::Digest;

/// Latest committed value of one key. A `None` value is a tombstone: the key
/// reads as absent but its version keeps advancing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateEntry {
    #[serde(with = "opt_hex")]
    pub value: Option<Vec<u8>>,
    pub version: Version,
}

/// Versioned key-value world state.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldState {
    entries: BTreeMap<String, StateEntry>,
}

impl WorldState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Live value and version, or `None` for never-written or deleted keys.
    pub fn get(&self, key: &str) -> Option<(&[u8], Version)> {
        let e = self.entries.get(key)?;
        e.value.as_deref().map(|v| (v, e.version))
    }

    /// Committed version including tombstones; this is what MVCC compares.
    pub fn version_of(&self, key: &str) -> Option<Version> {
        self.entries.get(key).map(|e| e.version)
    }

    pub fn apply(&mut self, key: &str, value: &WriteValue, version: Version) {
        let value = match value {
            WriteValue::Put(v) => Some(v.clone()),
            WriteValue::Delete => None,
        };
        self.entries.insert(key.to_owned(), StateEntry { value, version });
    }

    /// Live entries whose key starts with `prefix`, in key order.
    pub fn scan_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = (&'a str, &'a [u8], Version)> + 'a {
        self.entries
            .range::<str, _>((std::ops::Bound::Included(prefix), std::ops::Bound::Unbounded))
            .take_while(move |(k, _)| k.starts_with(prefix))
            .filter_map(|(k, e)| e.value.as_deref().map(|v| (k.as_str(), v, e.version)))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Digest of the canonical encoding of every entry, tombstones included.
    pub fn snapshot_digest(&self) -> Digest {
        let mut e = Encoder::new();
        e.len(self.entries.len());
        for (k, entry) in &self.entries {
            e.str(k).u64(entry.version.height).u32(entry.version.tx_index);
            match &entry.value {
                Some(v) => {
                    e.u8(1).bytes(v);
                }
                None => {
                    e.u8(0);
                }
            }
        }
        Digest::of(e.as_slice())
    }
}

mod opt_hex {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<u8>>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(b) => s.serialize_some(&hex::encode(b)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<u8>>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| hex::decode(s).map_err(serde::de::Error::custom))
            .transpose()
    }
}
