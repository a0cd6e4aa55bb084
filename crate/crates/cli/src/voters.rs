//! Scripted fact-checkers that vote on every open news item until all of
//! them are labeled.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use factledger_core::factcheck::Verdict;
use factledger_core::kv::{KvConfig, KvError};
use factledger_core::Digest;
use futures::stream::{self, StreamExt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::client::{Client, ClientError};

#[derive(Debug, Clone, PartialEq)]
pub struct VoterPolicy {
    /// Probability of voting the ground-truth label.
    pub accuracy: f64,
    pub seed: u64,
    pub timeout: Duration,
    pub poll: Duration,
    /// News items voted on concurrently.
    pub concurrency: usize,
    pub id_prefix: String,
    pub credential: String,
    /// Corpus carrying ground-truth labels.
    pub corpus: Option<PathBuf>,
}

impl Default for VoterPolicy {
    fn default() -> Self {
        Self {
            accuracy: 0.8,
            seed: 0,
            timeout: Duration::from_secs(120),
            poll: Duration::from_millis(250),
            concurrency: 32,
            id_prefix: "sim".into(),
            credential: "simulated-voter".into(),
            corpus: None,
        }
    }
}

impl VoterPolicy {
    /// Keys: `accuracy`, `seed`, `timeout_s`, `poll_ms`, `concurrency`,
    /// `id_prefix`, `credential`, `corpus` (relative to the file).
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut p = Self::from_kv(&KvConfig::parse(&text).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        if let (Some(c), Some(base)) = (&mut p.corpus, path.parent()) {
            if c.is_relative() {
                *c = base.join(&*c);
            }
        }
        Ok(p)
    }

    pub fn from_kv(kv: &KvConfig) -> Result<Self, KvError> {
        let d = Self::default();
        let accuracy: f64 = kv.parsed_or("accuracy", d.accuracy)?;
        if !(0.0..=1.0).contains(&accuracy) {
            return Err(KvError::Constraint { key: "accuracy".into(), message: "must lie in [0, 1]".into() });
        }
        Ok(Self {
            accuracy,
            seed: kv.parsed_or("seed", d.seed)?,
            timeout: Duration::from_secs_f64(kv.parsed_or("timeout_s", d.timeout.as_secs_f64())?),
            poll: Duration::from_millis(kv.parsed_or("poll_ms", d.poll.as_millis() as u64)?),
            concurrency: kv.parsed_or("concurrency", d.concurrency)?.max(1),
            id_prefix: kv.get("id_prefix").unwrap_or(&d.id_prefix).to_owned(),
            credential: kv.get("credential").unwrap_or(&d.credential).to_owned(),
            corpus: kv.get("corpus").map(PathBuf::from),
        })
    }
}

/// Ground truth for a news item without a corpus label: a seeded draw.
pub fn fallback_truth(seed: u64, news_id: &str) -> Verdict {
    let d = Digest::of(format!("truth/{seed}/{news_id}").as_bytes());
    Verdict::ALL[d.as_bytes()[0] as usize % 3]
}

/// The verdict `checker` casts on `news_id`: the truth with probability
/// `accuracy`, otherwise one of the other two verdicts uniformly. Depends
/// only on its arguments.
pub fn choose_verdict(seed: u64, checker: &str, news_id: &str, truth: Verdict, accuracy: f64) -> Verdict {
    let d = Digest::of(format!("vote/{seed}/{checker}/{news_id}").as_bytes());
    let mut rng = ChaCha20Rng::from_seed(*d.as_bytes());
    if rng.random::<f64>() < accuracy {
        return truth;
    }
    let others: Vec<Verdict> = Verdict::ALL.into_iter().filter(|v| *v != truth).collect();
    others[rng.random_range(0..others.len())]
}

#[derive(Debug)]
pub enum SimError {
    /// Nothing could be completed before the deadline.
    Timeout { open: usize },
    Api(ClientError),
}

impl std::fmt::Display for SimError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SimError::Timeout { open } => write!(f, "timed out with {open} news item(s) still under analysis"),
            SimError::Api(e) => e.fmt(f),
        }
    }
}

impl From<ClientError> for SimError {
    fn from(e: ClientError) -> Self {
        SimError::Api(e)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VoterSummary {
    pub votes_cast: usize,
    pub finalized: usize,
    pub verdicts: BTreeMap<String, usize>,
    pub balances: BTreeMap<String, u64>,
    pub total_minted: u64,
    pub sum_of_balances: u64,
}

struct Voter {
    id: String,
    client: Client,
}

/// Creates (or reuses) `n` checkers and logs each of them in.
async fn enlist(curator: &Client, api: &Client, n: usize, policy: &VoterPolicy) -> Result<Vec<Voter>, SimError> {
    let mut voters = Vec::with_capacity(n);
    for i in 0..n {
        let id = format!("{}-{i}", policy.id_prefix);
        let body = json!({ "checker_id": id, "credential": policy.credential, "display_name": format!("Simulated voter {i}") });
        match curator.post("/fact-checkers", &body).await {
            Ok(_) => {}
            Err(e) if e.code() == Some("CHECKER_EXISTS") => {}
            Err(e) => return Err(e.into()),
        }
        let client = api.login(&id, &policy.credential).await?;
        voters.push(Voter { id, client });
    }
    Ok(voters)
}

#[derive(Default)]
struct NewsOutcome {
    votes: Vec<(String, Verdict)>,
    finalized: Option<String>,
    errors: Vec<String>,
}

async fn vote_on(voters: &[Voter], news: &Value, labels: &HashMap<String, Verdict>, policy: &VoterPolicy) -> NewsOutcome {
    let id = news["news_id"].as_str().unwrap_or_default();
    let truth = news["content"]
        .as_str()
        .and_then(|c| labels.get(c).copied())
        .unwrap_or_else(|| fallback_truth(policy.seed, id));
    let mut out = NewsOutcome::default();
    for v in voters {
        let verdict = choose_verdict(policy.seed, &v.id, id, truth, policy.accuracy);
        let body = json!({ "verdict": verdict.as_str(), "rationale": format!("simulated review by {}", v.id) });
        match v.client.post(&format!("/news/{id}/votes"), &body).await {
            Ok(receipt) => {
                out.votes.push((v.id.clone(), verdict));
                let fin = &receipt["finalization"];
                if fin["outcome"] == "finalized" {
                    out.finalized = fin["result"]["verdict"].as_str().map(str::to_owned);
                    break;
                }
            }
            Err(e) if e.code() == Some("ALREADY_VOTED") => {}
            Err(e) if e.code() == Some("NEWS_ALREADY_LABELED") => break,
            Err(e) => out.errors.push(format!("{} on {id}: {e}", v.id)),
        }
    }
    out
}

/// Votes until no news is under analysis. `labels` maps news content to its
/// ground truth.
pub async fn simulate(
    api: &Client,
    curator: &Client,
    n: usize,
    policy: &VoterPolicy,
    labels: &HashMap<String, Verdict>,
    out: &mut impl Write,
) -> Result<VoterSummary, SimError> {
    let deadline = Instant::now() + policy.timeout;
    let voters = enlist(curator, api, n, policy).await?;
    let mut summary = VoterSummary::default();
    loop {
        let open = api.get("/news?status=under_analysis").await?;
        let open = open["news"].as_array().cloned().unwrap_or_default();
        if open.is_empty() {
            break;
        }
        let mut progress = false;
        let mut outcomes = stream::iter(open.iter())
            .map(|news| vote_on(&voters, news, labels, policy))
            .buffer_unordered(policy.concurrency);
        while let Some(o) = outcomes.next().await {
            progress |= !o.votes.is_empty();
            summary.votes_cast += o.votes.len();
            for e in &o.errors {
                let _ = writeln!(out, "error {e}");
            }
            if let Some(v) = o.finalized {
                summary.finalized += 1;
                *summary.verdicts.entry(v).or_default() += 1;
            }
        }
        if Instant::now() >= deadline {
            let left = api.get("/news?status=under_analysis").await?;
            return Err(SimError::Timeout { open: left["count"].as_u64().unwrap_or_default() as usize });
        }
        if !progress {
            tokio::time::sleep(policy.poll).await;
        }
    }
    for v in &voters {
        let b = api.get(&format!("/fact-checkers/{}/balance", v.id)).await?;
        summary.balances.insert(v.id.clone(), b["token_balance"].as_u64().unwrap_or_default());
    }
    let totals = api.get("/rewards/total").await?;
    summary.total_minted = totals["total_minted"].as_u64().unwrap_or_default();
    summary.sum_of_balances = totals["sum_of_balances"].as_u64().unwrap_or_default();
    Ok(summary)
}
