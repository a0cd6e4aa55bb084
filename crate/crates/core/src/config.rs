//! Platform configuration: one `key = value` file plus `FACTLEDGER_*`
//! environment overrides.
//!
//! ```text
//! service.bind = 127.0.0.1:8080
//! service.data_dir = ./data
//! service.session_ttl_s = 28800
//! service.seed = 42
//! service.request_log = ./data/requests.jsonl
//! policy.quorum = 3
//! policy.mode = simple_majority
//! policy.reward = 10
//! policy.alpha = 0.1
//! scoring.threshold = 0.7
//! scoring.lexicon = ./lexicon.tsv
//! curator.admin = change-me
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::factcheck::{credential_digest, ConsensusPolicy, TallyMode};
use crate::kv::{KvConfig, KvError};
use crate::scoring::SUSPICIOUS_THRESHOLD;
use crate::txflow::NetworkConfig;
use crate::Digest;

pub const ENV_PREFIX: &str = "FACTLEDGER";

const KEYS: [&str; 11] = [
    "service.bind",
    "service.data_dir",
    "service.session_ttl_s",
    "service.seed",
    "service.request_log",
    "policy.quorum",
    "policy.mode",
    "policy.reward",
    "policy.alpha",
    "scoring.threshold",
    "scoring.lexicon",
];

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Kv(#[from] KvError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AppConfig {
    pub network: NetworkConfig,
    pub policy: ConsensusPolicy,
    pub threshold: f64,
    pub lexicon: Option<PathBuf>,
    pub bind: String,
    pub data_dir: Option<PathBuf>,
    pub session_ttl: Duration,
    /// Seeds nonces, salts and session tokens; random when absent.
    pub seed: Option<u64>,
    pub request_log: Option<PathBuf>,
    /// Curator name to credential digest.
    pub curators: BTreeMap<String, Digest>,
}

impl Default for AppConfig {
    fn default() -> Self {
        Self {
            network: NetworkConfig::default(),
            policy: ConsensusPolicy::default(),
            threshold: SUSPICIOUS_THRESHOLD,
            lexicon: None,
            bind: "127.0.0.1:8080".into(),
            data_dir: None,
            session_ttl: Duration::from_secs(8 * 3600),
            seed: None,
            request_log: None,
            curators: BTreeMap::new(),
        }
    }
}

fn constraint(key: &str, message: impl Into<String>) -> KvError {
    KvError::Constraint { key: key.into(), message: message.into() }
}

impl AppConfig {
    /// Reads `path`, then applies environment overrides.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        let mut kv = KvConfig::parse(&text)?;
        Self::apply_env(&mut kv, |k| std::env::var(k).ok());
        let mut cfg = Self::from_kv(&kv)?;
        if let Some(base) = path.parent() {
            cfg.resolve_relative(base);
        }
        Ok(cfg)
    }

    pub fn apply_env(kv: &mut KvConfig, lookup: impl Fn(&str) -> Option<String>) {
        let keys = KEYS.iter().chain(NetworkConfig::KEYS.iter()).copied();
        kv.apply_env(ENV_PREFIX, keys, lookup);
    }

    pub fn from_kv(kv: &KvConfig) -> Result<Self, KvError> {
        let d = Self::default();
        let mode = match kv.get("policy.mode") {
            None => d.policy.mode,
            Some(m) => m
                .parse::<TallyMode>()
                .map_err(|_| KvError::Invalid { key: "policy.mode".into(), value: m.into() })?,
        };
        let policy = ConsensusPolicy {
            quorum: kv.parsed_or("policy.quorum", d.policy.quorum)?,
            mode,
            reward_per_aligned_vote: kv.parsed_or("policy.reward", d.policy.reward_per_aligned_vote)?,
            credibility_step: kv.parsed_or("policy.alpha", d.policy.credibility_step)?,
        };
        policy.validate().map_err(|m| constraint("policy", m))?;
        let threshold: f64 = kv.parsed_or("scoring.threshold", d.threshold)?;
        if !(0.0..=1.0).contains(&threshold) {
            return Err(constraint("scoring.threshold", "must lie in [0, 1]"));
        }
        let ttl: u64 = kv.parsed_or("service.session_ttl_s", d.session_ttl.as_secs())?;
        if ttl == 0 {
            return Err(constraint("service.session_ttl_s", "must be positive"));
        }
        let curators = kv
            .with_prefix("curator.")
            .map(|(name, cred)| {
                if name.is_empty() || cred.is_empty() {
                    Err(constraint("curator", "curator entries need a name and a credential"))
                } else {
                    Ok((name.to_owned(), credential_digest(name, cred)))
                }
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            network: NetworkConfig::from_kv(kv)?,
            policy,
            threshold,
            lexicon: kv.get("scoring.lexicon").map(PathBuf::from),
            bind: kv.get("service.bind").unwrap_or(&d.bind).to_owned(),
            data_dir: kv.get("service.data_dir").map(PathBuf::from),
            session_ttl: Duration::from_secs(ttl),
            seed: kv.parsed("service.seed")?,
            request_log: kv.get("service.request_log").map(PathBuf::from),
            curators,
        })
    }

    fn resolve_relative(&mut self, base: &Path) {
        for p in [&mut self.lexicon, &mut self.data_dir, &mut self.request_log].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = AppConfig::from_kv(&KvConfig::default()).unwrap();
        assert_eq!(c.policy, ConsensusPolicy::default());
        assert_eq!(c.threshold, 0.7);
        assert_eq!(c.session_ttl, Duration::from_secs(28800));
        assert!(c.curators.is_empty());
    }

    #[test]
    fn file_values_and_env_overrides() {
        let mut kv = KvConfig::parse("policy.quorum = 5\npolicy.mode = credibility_weighted\ncurator.root = pw").unwrap();
        AppConfig::apply_env(&mut kv, |k| (k == "FACTLEDGER_POLICY_QUORUM").then(|| "2".to_owned()));
        let c = AppConfig::from_kv(&kv).unwrap();
        assert_eq!(c.policy.quorum, 2);
        assert_eq!(c.policy.mode, TallyMode::CredibilityWeighted);
        assert_eq!(c.curators["root"], credential_digest("root", "pw"));
    }

    #[test]
    fn rejects_bad_values() {
        for text in ["policy.alpha = 1.5", "policy.quorum = 0", "policy.mode = plurality", "scoring.threshold = 2"] {
            assert!(AppConfig::from_kv(&KvConfig::parse(text).unwrap()).is_err(), "{text}");
        }
    }
}
