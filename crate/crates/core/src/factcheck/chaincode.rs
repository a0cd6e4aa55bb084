use std::sync::Arc;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::de::DeserializeOwned;
use serde::Serialize;

use super::credibility::update_credibility;
use super::error::FactCheckError;
use super::keys;
use super::tally::tally;
use super::types::*;
use crate::digest::Digest;
use crate::ledger::{Operation, Role};
use crate::scoring::Scorer;
use crate::txflow::{Chaincode, PrivateRead, TxContext};

pub mod ops {
    pub const REGISTER_NEWS: &str = "register_news";
    pub const DISPATCH: &str = "dispatch_classification_order";
    pub const CAST_VOTE: &str = "cast_vote";
    pub const FINALIZE: &str = "finalize_consensus";
    pub const CREATE_CHECKER: &str = "create_checker";
    pub const UPDATE_CHECKER: &str = "update_checker";
    pub const DEACTIVATE_CHECKER: &str = "deactivate_checker";

    pub const ALL: [&str; 7] =
        [REGISTER_NEWS, DISPATCH, CAST_VOTE, FINALIZE, CREATE_CHECKER, UPDATE_CHECKER, DEACTIVATE_CHECKER];
}

/// Transient keys carrying the sealed vote; never written on-chain.
pub mod transient {
    pub const VERDICT: &str = "verdict";
    pub const RATIONALE: &str = "rationale";
    pub const SALT: &str = "salt";
}

pub const VOTES_COLLECTION: &str = "votes";
const EXCERPT_CHARS: usize = 140;

type Result<T> = std::result::Result<T, FactCheckError>;

/// The fact-checking chaincode: news registration, sealed voting, quorum
/// consensus, credibility and token rewards.
#[derive(Clone)]
pub struct FactCheckChaincode {
    policy: ConsensusPolicy,
    scorer: Arc<dyn Scorer>,
}

impl std::fmt::Debug for FactCheckChaincode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FactCheckChaincode").field("policy", &self.policy).finish_non_exhaustive()
    }
}

impl FactCheckChaincode {
    pub fn new(policy: ConsensusPolicy, scorer: Arc<dyn Scorer>) -> std::result::Result<Self, String> {
        policy.validate()?;
        Ok(Self { policy, scorer })
    }

    pub fn policy(&self) -> &ConsensusPolicy {
        &self.policy
    }

    pub fn scorer(&self) -> &dyn Scorer {
        self.scorer.as_ref()
    }
}

impl Chaincode for FactCheckChaincode {
    type Error = FactCheckError;

    fn has_operation(&self, name: &str) -> bool {
        ops::ALL.contains(&name)
    }

    fn invoke(&self, ctx: &mut TxContext<'_>, op: &Operation) -> Result<Vec<u8>> {
        match op.name.as_str() {
            ops::REGISTER_NEWS => respond(&self.register_news(ctx, op)?),
            ops::DISPATCH => {
                let id = news_arg(op)?;
                respond(&self.dispatch(ctx, &id)?)
            }
            ops::CAST_VOTE => respond(&self.cast_vote(ctx, op)?),
            ops::FINALIZE => respond(&self.finalize_op(ctx, op)?),
            ops::CREATE_CHECKER => respond(&self.create_checker(ctx, op)?),
            ops::UPDATE_CHECKER => respond(&self.update_checker(ctx, op)?),
            ops::DEACTIVATE_CHECKER => respond(&self.deactivate_checker(ctx, op)?),
            other => Err(FactCheckError::InvalidArgument(format!("unknown operation `{other}`"))),
        }
    }
}

fn respond<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    Ok(serde_json::to_vec(v).expect("response serializes"))
}

fn load<T: DeserializeOwned>(ctx: &mut TxContext<'_>, key: &str) -> Result<Option<T>> {
    ctx.get_state(key)
        .map(|b| serde_json::from_slice(&b).map_err(|_| FactCheckError::CorruptState(key.to_owned())))
        .transpose()
}

fn store<T: Serialize>(ctx: &mut TxContext<'_>, key: String, v: &T) {
    ctx.put_state(key, serde_json::to_vec(v).expect("state value serializes"));
}

fn arg<'a>(op: &'a Operation, name: &str) -> Result<&'a str> {
    op.get(name).ok_or_else(|| FactCheckError::InvalidArgument(format!("missing `{name}`")))
}

fn news_arg(op: &Operation) -> Result<Digest> {
    let raw = arg(op, "news_id")?;
    Digest::from_hex(raw).map_err(|e| FactCheckError::InvalidArgument(format!("news_id: {e}")))
}

fn require_role(ctx: &TxContext<'_>, roles: &[Role], what: &str) -> Result<()> {
    if roles.contains(&ctx.submitter().role) {
        Ok(())
    } else {
        Err(FactCheckError::NotAuthorized(format!("{what} requires role {}", roles[0].as_str())))
    }
}

fn valid_checker_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.'))
}

fn load_news(ctx: &mut TxContext<'_>, id: &Digest) -> Result<NewsAsset> {
    load(ctx, &keys::news(id))?.ok_or_else(|| FactCheckError::NotFound(format!("news {id}")))
}

fn load_checker(ctx: &mut TxContext<'_>, id: &str) -> Result<FactChecker> {
    load(ctx, &keys::checker(id))?.ok_or_else(|| FactCheckError::UnknownChecker(id.to_owned()))
}

fn active_index(ctx: &mut TxContext<'_>) -> Result<Vec<String>> {
    Ok(load(ctx, keys::ACTIVE_CHECKERS)?.unwrap_or_default())
}

impl FactCheckChaincode {
    fn register_news(&self, ctx: &mut TxContext<'_>, op: &Operation) -> Result<RegisterReceipt> {
        let content = op.get("content").unwrap_or_default();
        if content.is_empty() {
            return Err(FactCheckError::EmptyContent);
        }
        let format: ContentFormat = op
            .get("format")
            .unwrap_or("text")
            .parse()
            .map_err(|_| FactCheckError::InvalidArgument("format must be text|image|audio|video".into()))?;
        let created_at = match op.get("created_at") {
            Some(s) => DateTime::parse_from_rfc3339(s)
                .map_err(|_| FactCheckError::InvalidArgument(format!("created_at `{s}` is not RFC 3339")))?
                .with_timezone(&Utc)
                .to_rfc3339_opts(SecondsFormat::AutoSi, true),
            None => return Err(FactCheckError::InvalidArgument("missing `created_at`".into())),
        };
        let id = news_id(content.as_bytes(), format);
        if ctx.get_state(&keys::news(&id)).is_some() {
            return Err(FactCheckError::DuplicateNews { news_id: id });
        }
        let score_report = (format == ContentFormat::Text).then(|| self.scorer.score(content));
        let excerpt = match format {
            ContentFormat::Text => content.chars().take(EXCERPT_CHARS).collect(),
            _ => String::new(),
        };
        let asset = NewsAsset {
            news_id: id,
            content: content.to_owned(),
            format,
            metadata: NewsMetadata {
                created_at,
                excerpt,
                author: op.get("author").unwrap_or("unknown").to_owned(),
                source_platform: op.get("platform").unwrap_or("unknown").to_owned(),
            },
            score_report,
            status: NewsStatus::Registered,
            registered_tx: ctx.tx_id(),
            label_tx: None,
            voters: Vec::new(),
        };
        store(ctx, keys::news(&id), &asset);
        let notified = self.dispatch(ctx, &id)?.len();
        Ok(RegisterReceipt { news_id: id, score: asset.score_report.as_ref().map(|r| r.score), notified })
    }

    /// Notifies every active checker about `news_id`, once per pair, and
    /// moves the asset to `under_analysis`.
    fn dispatch(&self, ctx: &mut TxContext<'_>, news_id: &Digest) -> Result<Vec<Notification>> {
        let mut asset = load_news(ctx, news_id)?;
        if matches!(asset.status, NewsStatus::Labeled(_)) {
            return Err(FactCheckError::NewsAlreadyLabeled);
        }
        if asset.status == NewsStatus::Registered {
            asset.status = NewsStatus::UnderAnalysis;
            store(ctx, keys::news(news_id), &asset);
        }
        let mut out = Vec::new();
        for checker_id in active_index(ctx)? {
            let key = keys::notification(&checker_id, news_id);
            let n = match load::<Notification>(ctx, &key)? {
                Some(n) => n,
                None => {
                    let n = Notification { checker_id: checker_id.clone(), news_id: *news_id, dispatch_tx: ctx.tx_id() };
                    store(ctx, key, &n);
                    n
                }
            };
            out.push(n);
        }
        Ok(out)
    }

    fn cast_vote(&self, ctx: &mut TxContext<'_>, op: &Operation) -> Result<VoteReceipt> {
        require_role(ctx, &[Role::FactChecker], "voting")?;
        let checker_id = ctx.submitter().id.clone();
        let news_id = news_arg(op)?;

        if !active_index(ctx)?.contains(&checker_id) {
            // Distinguish unknown from deactivated.
            load_checker(ctx, &checker_id)?;
            return Err(FactCheckError::InactiveChecker(checker_id));
        }
        let mut news = load_news(ctx, &news_id)?;
        if matches!(news.status, NewsStatus::Labeled(_)) {
            return Err(FactCheckError::NewsAlreadyLabeled);
        }
        let vote_key = keys::vote(&news_id, &checker_id);
        if ctx.get_state(&vote_key).is_some() {
            return Err(FactCheckError::AlreadyVoted(checker_id));
        }

        let verdict_raw = ctx.transient(transient::VERDICT).map(|b| String::from_utf8_lossy(b).into_owned());
        let verdict: Verdict = verdict_raw
            .as_deref()
            .unwrap_or_default()
            .parse()
            .map_err(|_| FactCheckError::UnknownVerdict(verdict_raw.unwrap_or_default()))?;
        let rationale = ctx
            .transient(transient::RATIONALE)
            .and_then(|b| std::str::from_utf8(b).ok())
            .map(str::to_owned)
            .filter(|r| !r.trim().is_empty())
            .ok_or_else(|| FactCheckError::InvalidArgument("a rationale is required".into()))?;
        let salt = ctx
            .transient(transient::SALT)
            .filter(|s| s.len() == SALT_LEN)
            .map(<[u8]>::to_vec)
            .ok_or_else(|| FactCheckError::InvalidArgument(format!("salt must be {SALT_LEN} bytes")))?;

        let preimage = VoteReveal::preimage(verdict, &rationale, &salt);
        let commitment = ctx.put_private(VOTES_COLLECTION, &keys::private_vote(&news_id, &checker_id), preimage)?;
        let record =
            VoteCommitment { checker_id: checker_id.clone(), news_id, commitment, cast_tx: ctx.tx_id(), excluded: false };
        store(ctx, vote_key, &record);

        news.voters.push(checker_id.clone());
        if news.status == NewsStatus::Registered {
            news.status = NewsStatus::UnderAnalysis;
        }
        let finalization =
            if news.voters.len() >= self.policy.quorum { Some(self.finalize(ctx, &mut news)?) } else { None };
        store(ctx, keys::news(&news_id), &news);
        Ok(VoteReceipt { news_id, checker_id, commitment, finalization })
    }

    fn finalize_op(&self, ctx: &mut TxContext<'_>, op: &Operation) -> Result<Finalization> {
        require_role(ctx, &[Role::Curator, Role::System], "finalization")?;
        let news_id = news_arg(op)?;
        let mut news = load_news(ctx, &news_id)?;
        if matches!(news.status, NewsStatus::Labeled(_)) {
            return Err(FactCheckError::NewsAlreadyLabeled);
        }
        let out = self.finalize(ctx, &mut news)?;
        store(ctx, keys::news(&news_id), &news);
        Ok(out)
    }

    /// Opens every commitment, excludes the ones whose private reveal does
    /// not match, and labels the news if at least a quorum remains.
    fn finalize(&self, ctx: &mut TxContext<'_>, news: &mut NewsAsset) -> Result<Finalization> {
        let quorum = self.policy.quorum;
        if news.voters.len() < quorum {
            return Err(FactCheckError::QuorumNotReached { have: news.voters.len(), need: quorum });
        }
        let news_id = news.news_id;
        let mut opened: Vec<(String, Verdict, String, Vec<u8>, Digest)> = Vec::new();
        let mut excluded = Vec::new();
        for checker_id in news.voters.clone() {
            let key = keys::vote(&news_id, &checker_id);
            let mut vote: VoteCommitment =
                load(ctx, &key)?.ok_or_else(|| FactCheckError::CorruptState(key.clone()))?;
            if vote.excluded {
                continue;
            }
            let reveal = match ctx.get_private(VOTES_COLLECTION, &keys::private_vote(&news_id, &checker_id))? {
                PrivateRead::Value(bytes) if Digest::of(&bytes) == vote.commitment => VoteReveal::parse_preimage(&bytes),
                _ => None,
            };
            match reveal {
                Some((verdict, rationale, salt)) => opened.push((checker_id, verdict, rationale, salt, vote.commitment)),
                None => {
                    vote.excluded = true;
                    store(ctx, key, &vote);
                    let mut checker = load_checker(ctx, &checker_id)?;
                    checker.credibility = update_credibility(checker.credibility, false, self.policy.credibility_step);
                    checker.flags += 1;
                    store(ctx, keys::checker(&checker_id), &checker);
                    excluded.push(checker_id);
                }
            }
        }
        if opened.len() < quorum {
            return Ok(Finalization::QuorumNotReached { excluded, remaining: opened.len(), quorum });
        }

        let mut checkers = Vec::with_capacity(opened.len());
        for (id, ..) in &opened {
            checkers.push(load_checker(ctx, id)?);
        }
        let verdicts: Vec<Verdict> = opened.iter().map(|o| o.1).collect();
        let credibilities: Vec<f64> = checkers.iter().map(|c| c.credibility).collect();
        let (verdict, totals) =
            tally(&verdicts, &credibilities, self.policy.mode).map_err(|_| FactCheckError::EmptyVotes)?;

        let reward = self.policy.reward_per_aligned_vote;
        let mut aligned = Vec::new();
        for (checker, v) in checkers.iter_mut().zip(&verdicts) {
            let is_aligned = *v == verdict;
            if is_aligned {
                checker.token_balance += reward;
                aligned.push(checker.checker_id.clone());
            }
            checker.credibility = update_credibility(checker.credibility, is_aligned, self.policy.credibility_step);
            store(ctx, keys::checker(&checker.checker_id), checker);
        }
        let minted: u64 = load(ctx, keys::REWARD_TOTAL)?.unwrap_or(0);
        store(ctx, keys::REWARD_TOTAL.to_owned(), &(minted + reward * aligned.len() as u64));

        news.status = NewsStatus::Labeled(verdict);
        news.label_tx = Some(ctx.tx_id());
        let result = ConsensusResult {
            news_id,
            verdict,
            mode: self.policy.mode,
            tally: totals,
            participants: opened.iter().map(|o| o.0.clone()).collect(),
            reveals: opened
                .into_iter()
                .map(|(checker_id, verdict, rationale, salt, commitment)| RevealedVote {
                    checker_id,
                    verdict,
                    rationale,
                    salt: hex::encode(salt),
                    commitment,
                })
                .collect(),
            excluded,
            aligned,
            reward_per_aligned_vote: reward,
            finalize_tx: ctx.tx_id(),
        };
        store(ctx, keys::consensus(&news_id), &result);
        Ok(Finalization::Finalized { result })
    }

    fn create_checker(&self, ctx: &mut TxContext<'_>, op: &Operation) -> Result<FactChecker> {
        require_role(ctx, &[Role::Curator], "creating fact-checkers")?;
        let id = arg(op, "checker_id")?;
        if !valid_checker_id(id) {
            return Err(FactCheckError::InvalidArgument(format!("checker_id `{id}` must be 1-64 of [A-Za-z0-9_.-]")));
        }
        let credential_digest = Digest::from_hex(arg(op, "credential_digest")?)
            .map_err(|e| FactCheckError::InvalidArgument(format!("credential_digest: {e}")))?;
        let org = arg(op, "org")?;
        if ctx.get_state(&keys::checker(id)).is_some() {
            return Err(FactCheckError::CheckerExists(id.to_owned()));
        }
        let checker = FactChecker {
            checker_id: id.to_owned(),
            display_name: op.get("display_name").unwrap_or(id).to_owned(),
            credential_digest,
            org: org.to_owned(),
            credibility: INITIAL_CREDIBILITY,
            active: true,
            token_balance: 0,
            flags: 0,
        };
        store(ctx, keys::checker(id), &checker);
        let mut index = active_index(ctx)?;
        if let Err(pos) = index.binary_search_by(|c| c.as_str().cmp(id)) {
            index.insert(pos, id.to_owned());
        }
        store(ctx, keys::ACTIVE_CHECKERS.to_owned(), &index);
        Ok(checker)
    }

    fn update_checker(&self, ctx: &mut TxContext<'_>, op: &Operation) -> Result<FactChecker> {
        let id = arg(op, "checker_id")?;
        let s = ctx.submitter();
        if !(s.role == Role::Curator || (s.role == Role::FactChecker && s.id == id)) {
            return Err(FactCheckError::NotAuthorized("only a curator or the checker may update a profile".into()));
        }
        let mut checker = load_checker(ctx, id)?;
        if let Some(name) = op.get("display_name") {
            checker.display_name = name.to_owned();
        }
        if let Some(d) = op.get("credential_digest") {
            checker.credential_digest =
                Digest::from_hex(d).map_err(|e| FactCheckError::InvalidArgument(format!("credential_digest: {e}")))?;
        }
        store(ctx, keys::checker(id), &checker);
        Ok(checker)
    }

    fn deactivate_checker(&self, ctx: &mut TxContext<'_>, op: &Operation) -> Result<FactChecker> {
        require_role(ctx, &[Role::Curator], "deactivating fact-checkers")?;
        let id = arg(op, "checker_id")?;
        let mut checker = load_checker(ctx, id)?;
        if checker.active {
            checker.active = false;
            store(ctx, keys::checker(id), &checker);
            let mut index = active_index(ctx)?;
            index.retain(|c| c != id);
            store(ctx, keys::ACTIVE_CHECKERS.to_owned(), &index);
        }
        Ok(checker)
    }
}
