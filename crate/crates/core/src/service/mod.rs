//! REST/JSON facade under `/v1`: sessions, role checks, news, votes,
//! fact-checker administration, dashboard and chain explorer.

mod auth;
mod error;
mod routes;
mod telemetry;

use std::collections::BTreeMap;
use std::future::Future;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::routing::{get, post};
use axum::Router;
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tokio::sync::watch;
use tokio::task::JoinHandle;

pub use auth::{Auth, Session, SessionStore};
pub use error::ApiError;
pub use telemetry::{percentile, LatencyStats, Telemetry};

use crate::config::AppConfig;
use crate::factcheck::query::NewsView;
use crate::platform::Platform;
use crate::Digest;

/// Lookup against external repositories of already-labeled news.
pub trait ExternalLookup: Send + Sync {
    fn lookup(&self, news: &NewsView) -> ExternalMatch;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalMatch {
    pub matched: bool,
    pub source: Option<String>,
    pub verdict: Option<String>,
    pub note: String,
}

/// Always answers "no external match".
#[derive(Debug, Clone, Copy, Default)]
pub struct NoExternalRepository;

impl ExternalLookup for NoExternalRepository {
    fn lookup(&self, _: &NewsView) -> ExternalMatch {
        ExternalMatch { matched: false, source: None, verdict: None, note: "no external match".into() }
    }
}

pub struct AppState {
    pub platform: Arc<Platform>,
    pub sessions: SessionStore,
    pub telemetry: Telemetry,
    pub curators: BTreeMap<String, Digest>,
    pub external: Box<dyn ExternalLookup>,
}

impl AppState {
    pub fn new(platform: Arc<Platform>, config: &AppConfig, telemetry: Telemetry) -> Self {
        Self {
            platform,
            sessions: SessionStore::new(config.session_ttl),
            telemetry,
            curators: config.curators.clone(),
            external: Box::new(NoExternalRepository),
        }
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    use routes::*;
    let v1 = Router::new()
        .route("/health", get(health))
        .route("/login", post(login))
        .route("/check-news/{id}", get(check_news))
        .route("/news", get(list_news).post(register_news))
        .route("/news/suspicious", get(suspicious))
        .route("/news/{id}/votes", post(cast_vote))
        .route("/news/{id}/dispatch", post(dispatch))
        .route("/news/{id}/finalize", post(finalize))
        .route("/notifications", get(notifications))
        .route("/fact-checkers", get(list_checkers).post(create_checker))
        .route("/fact-checkers/{id}", get(get_checker).patch(update_checker).delete(deactivate_checker))
        .route("/fact-checkers/{id}/balance", get(balance))
        .route("/rewards/total", get(rewards_total))
        .route("/dashboard", get(dashboard))
        .route("/chain", get(chain_head))
        .route("/chain/verify", get(verify_chain))
        .route("/blocks/{height}", get(block))
        .route("/transactions/{id}", get(transaction))
        .route("/external-lookup/{id}", get(external_lookup))
        .route("/metrics/latency", get(latency))
        .route_layer(axum::middleware::from_fn_with_state(state.clone(), telemetry::track));
    Router::new().nest("/v1", v1).with_state(state)
}

/// A running service: its bound address and a handle to stop it.
pub struct Running {
    pub addr: SocketAddr,
    stop: watch::Sender<bool>,
    task: JoinHandle<std::io::Result<()>>,
    orderer: JoinHandle<()>,
}

impl Running {
    /// Stops accepting requests, commits what is queued and waits.
    pub async fn shutdown(self) -> std::io::Result<()> {
        let _ = self.stop.send(true);
        let served = self.task.await.map_err(std::io::Error::other)?;
        let _ = self.orderer.await;
        served
    }
}

async fn stopped(mut rx: watch::Receiver<bool>) {
    while !*rx.borrow() {
        if rx.changed().await.is_err() {
            return;
        }
    }
}

/// Serves `state` on `listener` with a block-cutting orderer task.
pub fn spawn(state: Arc<AppState>, listener: TcpListener) -> std::io::Result<Running> {
    let addr = listener.local_addr()?;
    let (stop, rx) = watch::channel(false);
    let orderer = tokio::spawn(state.platform.clone().run_orderer(stopped(rx.clone())));
    let app = router(state);
    let task = tokio::spawn(async move { axum::serve(listener, app).with_graceful_shutdown(stopped(rx)).await });
    Ok(Running { addr, stop, task, orderer })
}

/// Runs until `shutdown` resolves.
pub async fn serve(
    state: Arc<AppState>,
    listener: TcpListener,
    shutdown: impl Future<Output = ()>,
) -> std::io::Result<()> {
    let running = spawn(state, listener)?;
    shutdown.await;
    running.shutdown().await
}
