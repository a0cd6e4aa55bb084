//! World-state key layout.

use crate::digest::Digest;

pub const NEWS_PREFIX: &str = "news/";
pub const CHECKER_PREFIX: &str = "checker/";
pub const NOTIFICATION_PREFIX: &str = "notification/";
pub const CONSENSUS_PREFIX: &str = "consensus/";
pub const REWARD_TOTAL: &str = "reward/total";
pub const ACTIVE_CHECKERS: &str = "index/active-checkers";

pub fn news(id: &Digest) -> String {
    format!("{NEWS_PREFIX}{id}")
}

pub fn checker(id: &str) -> String {
    format!("{CHECKER_PREFIX}{id}")
}

pub fn vote(news: &Digest, checker: &str) -> String {
    format!("vote/{news}/{checker}")
}

pub fn consensus(news: &Digest) -> String {
    format!("{CONSENSUS_PREFIX}{news}")
}

pub fn notification(checker: &str, news: &Digest) -> String {
    format!("{NOTIFICATION_PREFIX}{checker}/{news}")
}

/// Key of a plaintext vote inside the `votes` private collection.
pub fn private_vote(news: &Digest, checker: &str) -> String {
    format!("{news}/{checker}")
}
