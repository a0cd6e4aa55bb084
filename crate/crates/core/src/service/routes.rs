use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::IntoResponse;
use axum::Json;
use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::auth::Auth;
use super::error::ApiError;
use super::AppState;
use crate::factcheck::query::{self, CheckerView};
use crate::factcheck::{
    credential_digest, ops, ContentFormat, FactChecker, Finalization, Notification, RegisterReceipt, Verdict,
    VoteReceipt,
};
use crate::ledger::{verify_log_file, Operation, Role, VerificationReport};
use crate::platform::Committed;
use crate::Digest;

type ApiResult<T> = Result<T, ApiError>;
type AppS = State<Arc<AppState>>;

fn parse_id(raw: &str) -> ApiResult<Digest> {
    Digest::from_hex(raw).map_err(|_| ApiError::bad_request("MALFORMED_ID", "ids are 64 lowercase hex characters"))
}

/// Response of every mutating call: the transaction and where it landed.
#[derive(Debug, Serialize)]
pub struct Receipt<T: Serialize> {
    pub tx_id: Digest,
    pub block: u64,
    pub index: u32,
    #[serde(flatten)]
    pub result: T,
}

impl<T: Serialize> From<Committed<T>> for Receipt<T> {
    fn from(c: Committed<T>) -> Self {
        Receipt { tx_id: c.tx_id, block: c.location.height, index: c.location.tx_index, result: c.response }
    }
}

pub async fn health(State(s): AppS) -> Json<Value> {
    Json(json!({ "status": "ok", "height": s.platform.network().height() }))
}

#[derive(Debug, Deserialize)]
pub struct LoginRequest {
    pub username: String,
    pub credential: String,
}

pub async fn login(State(s): AppS, Json(req): Json<LoginRequest>) -> ApiResult<impl IntoResponse> {
    let bad = || ApiError::unauthorized("bad username or credential");
    let digest = credential_digest(&req.username, &req.credential);
    let (role, org) = if let Some(stored) = s.curators.get(&req.username) {
        if *stored != digest {
            return Err(bad());
        }
        (Role::Curator, s.platform.network().config().orgs[0].clone())
    } else {
        let checker = s.platform.with_ledger(|l| query::checker(l, &req.username)).map_err(|_| bad())?;
        if checker.credential_digest != digest {
            return Err(bad());
        }
        if !checker.active {
            return Err(ApiError::new(StatusCode::FORBIDDEN, "INACTIVE_CHECKER", "this fact-checker is deactivated"));
        }
        (Role::FactChecker, checker.org)
    };
    let session = s.sessions.issue(s.platform.random_bytes(), &req.username, role, &org);
    Ok(Json(session))
}

pub async fn check_news(State(s): AppS, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let id = parse_id(&id)?;
    let view = s.platform.with_ledger(|l| query::check_news(l, &id, s.platform.threshold()))?;
    Ok(Json(view))
}

#[derive(Debug, Deserialize)]
pub struct NewsRequest {
    pub content: String,
    #[serde(default)]
    pub format: Option<String>,
    #[serde(default)]
    pub created_at: Option<String>,
    #[serde(default)]
    pub author: Option<String>,
    #[serde(default)]
    pub platform: Option<String>,
}

pub async fn register_news(State(s): AppS, auth: Auth, Json(req): Json<NewsRequest>) -> ApiResult<impl IntoResponse> {
    let format: ContentFormat = req
        .format
        .as_deref()
        .unwrap_or("text")
        .parse()
        .map_err(|_| ApiError::bad_request("INVALID_ARGUMENT", "format must be text|image|audio|video"))?;
    let created_at = req.created_at.unwrap_or_else(|| Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true));
    let proposal = s.platform.register_proposal(
        auth.0.submitter(),
        &req.content,
        format,
        &created_at,
        req.author.as_deref().unwrap_or("unknown"),
        req.platform.as_deref().unwrap_or("unknown"),
    );
    let c: Committed<RegisterReceipt> = s.platform.execute_proposal(proposal).await?;
    Ok((StatusCode::CREATED, Json(Receipt::from(c))))
}

#[derive(Debug, Deserialize)]
pub struct NewsFilter {
    pub status: Option<String>,
}

pub async fn list_news(State(s): AppS, Query(f): Query<NewsFilter>) -> Json<Value> {
    let mut list = s.platform.with_ledger(|l| query::list_news(l, s.platform.threshold()));
    if let Some(status) = &f.status {
        list.retain(|n| &n.status == status);
    }
    Json(json!({ "count": list.len(), "news": list }))
}

pub async fn suspicious(State(s): AppS) -> Json<Value> {
    let list = s.platform.with_ledger(|l| query::list_suspicious(l, s.platform.threshold()));
    Json(json!({ "threshold": s.platform.threshold(), "news": list }))
}

#[derive(Debug, Deserialize)]
pub struct VoteRequest {
    pub verdict: String,
    pub rationale: String,
}

pub async fn cast_vote(
    State(s): AppS,
    auth: Auth,
    Path(id): Path<String>,
    Json(req): Json<VoteRequest>,
) -> ApiResult<impl IntoResponse> {
    let session = auth.require(Role::FactChecker)?;
    let id = parse_id(&id)?;
    let verdict: Verdict = req
        .verdict
        .parse()
        .map_err(|_| ApiError::bad_request("UNKNOWN_VERDICT", "verdict must be True, False or Partial"))?;
    let proposal = s.platform.vote_proposal(session.submitter(), &id, verdict, &req.rationale);
    let c: Committed<VoteReceipt> = s.platform.execute_proposal(proposal).await?;
    Ok((StatusCode::CREATED, Json(Receipt::from(c))))
}

pub async fn dispatch(State(s): AppS, auth: Auth, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let session = auth.require(Role::Curator)?;
    let id = parse_id(&id)?;
    let op = Operation::new(ops::DISPATCH).arg("news_id", id.to_hex());
    let c: Committed<Vec<Notification>> = s.platform.execute(session.submitter(), op).await?;
    Ok(Json(Receipt::from(c.map_notifications())))
}

trait MapNotifications {
    fn map_notifications(self) -> Committed<Value>;
}

impl MapNotifications for Committed<Vec<Notification>> {
    fn map_notifications(self) -> Committed<Value> {
        let count = self.response.len();
        Committed {
            tx_id: self.tx_id,
            location: self.location,
            response: json!({ "notifications": self.response, "count": count }),
        }
    }
}

pub async fn finalize(State(s): AppS, auth: Auth, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let session = auth.require(Role::Curator)?;
    let id = parse_id(&id)?;
    let op = Operation::new(ops::FINALIZE).arg("news_id", id.to_hex());
    let c: Committed<Finalization> = s.platform.execute(session.submitter(), op).await?;
    Ok(Json(Receipt::from(c)))
}

#[derive(Debug, Deserialize)]
pub struct NotificationQuery {
    pub checker: Option<String>,
}

pub async fn notifications(
    State(s): AppS,
    auth: Auth,
    Query(q): Query<NotificationQuery>,
) -> ApiResult<impl IntoResponse> {
    let checker = match auth.0.role {
        Role::FactChecker => auth.0.principal.clone(),
        _ => q.checker.ok_or_else(|| ApiError::bad_request("INVALID_ARGUMENT", "curators must pass ?checker=<id>"))?,
    };
    let list = s.platform.with_ledger(|l| query::notifications(l, &checker));
    let pending = list.iter().filter(|n| n.pending).count();
    Ok(Json(json!({ "checker_id": checker, "pending": pending, "notifications": list })))
}

pub async fn list_checkers(State(s): AppS) -> Json<Vec<CheckerView>> {
    Json(s.platform.with_ledger(query::list_checkers).into_iter().map(CheckerView::from).collect())
}

pub async fn get_checker(State(s): AppS, Path(id): Path<String>) -> ApiResult<Json<CheckerView>> {
    Ok(Json(s.platform.with_ledger(|l| query::checker(l, &id))?.into()))
}

#[derive(Debug, Deserialize)]
pub struct CreateChecker {
    pub checker_id: String,
    #[serde(default)]
    pub display_name: Option<String>,
    pub credential: String,
    #[serde(default)]
    pub org: Option<String>,
}

pub async fn create_checker(State(s): AppS, auth: Auth, Json(req): Json<CreateChecker>) -> ApiResult<impl IntoResponse> {
    let session = auth.require(Role::Curator)?;
    if req.credential.is_empty() {
        return Err(ApiError::bad_request("INVALID_ARGUMENT", "credential must not be empty"));
    }
    let orgs = &s.platform.network().config().orgs;
    let org = match req.org {
        Some(o) if orgs.contains(&o) => o,
        Some(o) => return Err(ApiError::bad_request("INVALID_ARGUMENT", format!("unknown organisation `{o}`"))),
        None => {
            let n = s.platform.with_ledger(|l| query::list_checkers(l).len());
            orgs[n % orgs.len()].clone()
        }
    };
    let mut op = Operation::new(ops::CREATE_CHECKER)
        .arg("checker_id", &req.checker_id)
        .arg("credential_digest", credential_digest(&req.checker_id, &req.credential).to_hex())
        .arg("org", org);
    if let Some(name) = req.display_name {
        op = op.arg("display_name", name);
    }
    let c: Committed<FactChecker> = s.platform.execute(session.submitter(), op).await?;
    let c = Committed { tx_id: c.tx_id, location: c.location, response: CheckerView::from(c.response) };
    Ok((StatusCode::CREATED, Json(Receipt::from(c))))
}

#[derive(Debug, Deserialize)]
pub struct UpdateChecker {
    #[serde(default)]
    pub display_name: Option<String>,
    #[serde(default)]
    pub credential: Option<String>,
}

pub async fn update_checker(
    State(s): AppS,
    auth: Auth,
    Path(id): Path<String>,
    Json(req): Json<UpdateChecker>,
) -> ApiResult<impl IntoResponse> {
    let self_edit = auth.0.role == Role::FactChecker && auth.0.principal == id;
    if auth.0.role != Role::Curator && !self_edit {
        return Err(ApiError::forbidden("only a curator or the checker may update a profile"));
    }
    let mut op = Operation::new(ops::UPDATE_CHECKER).arg("checker_id", &id);
    if let Some(name) = req.display_name {
        op = op.arg("display_name", name);
    }
    if let Some(cred) = &req.credential {
        if cred.is_empty() {
            return Err(ApiError::bad_request("INVALID_ARGUMENT", "credential must not be empty"));
        }
        op = op.arg("credential_digest", credential_digest(&id, cred).to_hex());
    }
    let c: Committed<FactChecker> = s.platform.execute(auth.0.submitter(), op).await?;
    let c = Committed { tx_id: c.tx_id, location: c.location, response: CheckerView::from(c.response) };
    Ok(Json(Receipt::from(c)))
}

pub async fn deactivate_checker(State(s): AppS, auth: Auth, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let session = auth.require(Role::Curator)?;
    let op = Operation::new(ops::DEACTIVATE_CHECKER).arg("checker_id", &id);
    let c: Committed<FactChecker> = s.platform.execute(session.submitter(), op).await?;
    s.sessions.revoke_principal(&id);
    let c = Committed { tx_id: c.tx_id, location: c.location, response: CheckerView::from(c.response) };
    Ok(Json(Receipt::from(c)))
}

pub async fn balance(State(s): AppS, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let balance = s.platform.with_ledger(|l| query::reward_query(l, &id))?;
    Ok(Json(json!({ "checker_id": id, "token_balance": balance })))
}

pub async fn rewards_total(State(s): AppS) -> Json<Value> {
    let (minted, balances) = s.platform.with_ledger(|l| (query::total_minted(l), query::sum_balances(l)));
    Json(json!({ "total_minted": minted, "sum_of_balances": balances }))
}

pub async fn dashboard(State(s): AppS) -> Json<query::DashboardSummary> {
    Json(s.platform.with_ledger(|l| query::dashboard(l, s.platform.threshold())))
}

pub async fn chain_head(State(s): AppS) -> Json<Value> {
    s.platform.with_ledger(|l| {
        let tip = l.blocks().last();
        Json(json!({
            "height": l.height(),
            "tip_hash": tip.map(|b| b.block_hash),
            "transactions": l.tx_count(),
            "state_digest": l.state().snapshot_digest(),
        }))
    })
}

pub async fn block(State(s): AppS, Path(height): Path<String>) -> ApiResult<impl IntoResponse> {
    let h: u64 = height.parse().map_err(|_| ApiError::bad_request("INVALID_ARGUMENT", "height must be an integer"))?;
    let block = s
        .platform
        .with_ledger(|l| l.get_block(h).cloned())
        .map_err(|_| ApiError::not_found(format!("no block at height {h}")))?;
    Ok(Json(block))
}

pub async fn transaction(State(s): AppS, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let id = parse_id(&id)?;
    let (tx, loc) = s
        .platform
        .with_ledger(|l| l.get_transaction(&id).map(|(t, loc)| (t.clone(), loc)))
        .map_err(|_| ApiError::not_found(format!("no transaction {id}")))?;
    Ok(Json(json!({ "block": loc.height, "index": loc.tx_index, "transaction": tx })))
}

pub async fn verify_chain(State(s): AppS) -> ApiResult<impl IntoResponse> {
    let network = s.platform.network();
    let mut sources = Vec::new();
    let mut overall: Option<VerificationReport> = None;
    for i in 0..network.config().orgs.len() {
        let (org, memory, log) = network.with_org(i, |o| (o.org_id.clone(), o.ledger.verify_chain(), o.ledger.log_path().map(|p| p.to_path_buf())));
        sources.push(json!({ "source": format!("{org}/memory"), "report": memory }));
        overall = Some(match overall {
            None => memory.clone(),
            Some(r) => r.merge(memory.clone()),
        });
        if let Some(path) = log {
            let report = verify_log_file(&path).map_err(|e| ApiError::internal(format!("{}: {e}", path.display())))?;
            sources.push(json!({ "source": format!("{org}/log"), "report": report }));
            overall = overall.map(|r| r.merge(report));
        }
    }
    let overall = overall.expect("at least one organisation");
    Ok(Json(json!({
        "ok": overall.is_ok(),
        "first_bad_height": overall.first_bad_height(),
        "report": overall,
        "sources": sources,
    })))
}

pub async fn external_lookup(State(s): AppS, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let id = parse_id(&id)?;
    let view = s.platform.with_ledger(|l| query::check_news(l, &id, s.platform.threshold()))?;
    Ok(Json(s.external.lookup(&view)))
}

pub async fn latency(State(s): AppS) -> Json<Value> {
    Json(json!({ "routes": s.telemetry.stats() }))
}
