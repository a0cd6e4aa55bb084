use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::kv::{KvConfig, KvError};

/// `required` of `total` organisations must endorse a transaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndorsementPolicy {
    pub required: usize,
    pub total: usize,
}

impl EndorsementPolicy {
    pub fn new(required: usize, total: usize) -> Result<Self, String> {
        if required == 0 || required > total {
            return Err(format!("endorsement requires 1 <= E <= N, got E={required}, N={total}"));
        }
        Ok(Self { required, total })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectionConfig {
    pub name: String,
    pub members: Vec<String>,
}

impl CollectionConfig {
    pub fn is_member(&self, org: &str) -> bool {
        self.members.iter().any(|m| m == org)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockMode {
    /// Block timestamps from the system clock.
    Wall,
    /// `start + height * step` milliseconds; makes runs bit-reproducible.
    Logical { start_ms: u64, step_ms: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub orgs: Vec<String>,
    pub endorsement: EndorsementPolicy,
    pub block_max_txs: usize,
    pub block_timeout: Duration,
    pub collections: Vec<CollectionConfig>,
    pub clock: ClockMode,
}

pub const DEFAULT_ORGS: [&str; 3] = ["org1", "org2", "org3"];

impl Default for NetworkConfig {
    fn default() -> Self {
        let orgs: Vec<String> = DEFAULT_ORGS.iter().map(|s| s.to_string()).collect();
        Self {
            endorsement: EndorsementPolicy { required: 2, total: orgs.len() },
            block_max_txs: 10,
            block_timeout: Duration::from_millis(500),
            collections: vec![CollectionConfig { name: "votes".into(), members: orgs.clone() }],
            orgs,
            clock: ClockMode::Wall,
        }
    }
}

impl NetworkConfig {
    /// Keys read from a config file; see [`NetworkConfig::from_kv`].
    pub const KEYS: [&'static str; 5] = [
        "network.orgs",
        "network.endorsement",
        "network.block_max_txs",
        "network.block_timeout_ms",
        "network.clock",
    ];

    /// Reads `network.*` keys, falling back to defaults:
    ///
    /// ```text
    /// network.orgs = org1, org2, org3
    /// network.endorsement = 2
    /// network.block_max_txs = 10
    /// network.block_timeout_ms = 500
    /// network.clock = wall            # or logical:<start_ms>:<step_ms>
    /// network.collection.votes = org1, org2, org3
    /// ```
    pub fn from_kv(kv: &KvConfig) -> Result<Self, KvError> {
        let mut cfg = NetworkConfig::default();
        if let Some(orgs) = kv.list("network.orgs") {
            cfg.orgs = orgs;
            for c in &mut cfg.collections {
                c.members = cfg.orgs.clone();
            }
        }
        let required = kv.parsed_or("network.endorsement", cfg.endorsement.required.min(cfg.orgs.len()))?;
        cfg.endorsement = EndorsementPolicy::new(required, cfg.orgs.len())
            .map_err(|message| KvError::Constraint { key: "network.endorsement".into(), message })?;
        cfg.block_max_txs = kv.parsed_or("network.block_max_txs", cfg.block_max_txs)?;
        cfg.block_timeout = Duration::from_millis(kv.parsed_or("network.block_timeout_ms", 500u64)?);
        if let Some(v) = kv.get("network.clock") {
            cfg.clock = parse_clock(v).ok_or_else(|| KvError::Invalid { key: "network.clock".into(), value: v.into() })?;
        }
        for (name, members) in kv.with_prefix("network.collection.") {
            let members: Vec<String> =
                members.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_owned).collect();
            cfg.collections.retain(|c| c.name != name);
            cfg.collections.push(CollectionConfig { name: name.to_owned(), members });
        }
        cfg.validate().map_err(|message| KvError::Constraint { key: "network".into(), message })?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.orgs.is_empty() {
            return Err("at least one organisation is required".into());
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = self.orgs.iter().find(|o| !seen.insert(o.as_str())) {
            return Err(format!("duplicate organisation `{dup}`"));
        }
        EndorsementPolicy::new(self.endorsement.required, self.orgs.len())?;
        if self.endorsement.total != self.orgs.len() {
            return Err("endorsement total must equal the organisation count".into());
        }
        if self.block_max_txs == 0 {
            return Err("block_max_txs must be positive".into());
        }
        for c in &self.collections {
            if let Some(m) = c.members.iter().find(|m| !self.orgs.contains(m)) {
                return Err(format!("collection `{}` names unknown organisation `{m}`", c.name));
            }
        }
        Ok(())
    }

    pub fn collection(&self, name: &str) -> Option<&CollectionConfig> {
        self.collections.iter().find(|c| c.name == name)
    }
}

fn parse_clock(v: &str) -> Option<ClockMode> {
    if v == "wall" {
        return Some(ClockMode::Wall);
    }
    let rest = v.strip_prefix("logical")?;
    if rest.is_empty() {
        return Some(ClockMode::Logical { start_ms: 0, step_ms: 1000 });
    }
    let mut parts = rest.strip_prefix(':')?.split(':');
    let start_ms = parts.next()?.parse().ok()?;
    let step_ms = parts.next()?.parse().ok()?;
    parts.next().is_none().then_some(ClockMode::Logical { start_ms, step_ms })
}
