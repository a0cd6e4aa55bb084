use std::collections::HashMap;
use std::sync::Arc;
use std::time::{Duration, Instant, SystemTime};

use axum::extract::FromRequestParts;
use axum::http::header::AUTHORIZATION;
use axum::http::request::Parts;
use chrono::{DateTime, SecondsFormat, Utc};
use parking_lot::RwLock;
use serde::{Deserialize, Serialize};

use super::error::ApiError;
use super::AppState;
use crate::ledger::{Role, Submitter};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub token: String,
    pub principal: String,
    pub role: Role,
    /// Organisation the principal submits through.
    pub org: String,
    /// RFC 3339 UTC.
    pub expires_at: String,
    #[serde(skip, default = "Instant::now")]
    deadline: Instant,
}

impl Session {
    pub fn submitter(&self) -> Submitter {
        Submitter { id: self.principal.clone(), org: self.org.clone(), role: self.role }
    }

    pub fn is_expired(&self, now: Instant) -> bool {
        now >= self.deadline
    }
}

#[derive(Debug)]
pub struct SessionStore {
    ttl: Duration,
    sessions: RwLock<HashMap<String, Session>>,
}

impl SessionStore {
    pub fn new(ttl: Duration) -> Self {
        Self { ttl, sessions: RwLock::new(HashMap::new()) }
    }

    pub fn issue(&self, token: [u8; 16], principal: &str, role: Role, org: &str) -> Session {
        let now = Instant::now();
        let expires: DateTime<Utc> = (SystemTime::now() + self.ttl).into();
        let session = Session {
            token: hex::encode(token),
            principal: principal.to_owned(),
            role,
            org: org.to_owned(),
            expires_at: expires.to_rfc3339_opts(SecondsFormat::Secs, true),
            deadline: now + self.ttl,
        };
        let mut sessions = self.sessions.write();
        sessions.retain(|_, s| !s.is_expired(now));
        sessions.insert(session.token.clone(), session.clone());
        session
    }

    pub fn lookup(&self, token: &str) -> Option<Session> {
        self.sessions.read().get(token).filter(|s| !s.is_expired(Instant::now())).cloned()
    }

    /// Ages a session so it expires immediately.
    #[doc(hidden)]
    pub fn expire(&self, token: &str) {
        if let Some(s) = self.sessions.write().get_mut(token) {
            s.deadline = Instant::now();
        }
    }

    pub fn revoke_principal(&self, principal: &str) {
        self.sessions.write().retain(|_, s| s.principal != principal);
    }
}

/// An authenticated caller, extracted from `Authorization: Bearer <token>`.
#[derive(Debug, Clone)]
pub struct Auth(pub Session);

impl Auth {
    pub fn require(&self, role: Role) -> Result<&Session, ApiError> {
        if self.0.role == role {
            Ok(&self.0)
        } else {
            Err(ApiError::forbidden(format!("requires role {}", role.as_str())))
        }
    }
}

impl FromRequestParts<Arc<AppState>> for Auth {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &Arc<AppState>) -> Result<Self, Self::Rejection> {
        let header = parts
            .headers
            .get(AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .ok_or_else(|| ApiError::unauthorized("missing bearer token"))?;
        let token = header
            .strip_prefix("Bearer ")
            .map(str::trim)
            .ok_or_else(|| ApiError::unauthorized("expected `Bearer <token>`"))?;
        state.sessions.lookup(token).map(Auth).ok_or_else(|| ApiError::unauthorized("unknown or expired session"))
    }
}
