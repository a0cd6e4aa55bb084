//! Thin JSON client for the `/v1` API.

use std::time::Duration;

use reqwest::{Method, StatusCode};
use serde_json::Value;

/// Attempts for a mutation invalidated by a concurrent write.
const MVCC_ATTEMPTS: u32 = 40;

#[derive(Debug)]
pub enum ClientError {
    Transport(reqwest::Error),
    Api { status: StatusCode, code: String, message: String, details: Value },
}

impl ClientError {
    pub fn code(&self) -> Option<&str> {
        match self {
            ClientError::Api { code, .. } => Some(code),
            ClientError::Transport(_) => None,
        }
    }
}

impl std::fmt::Display for ClientError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ClientError::Transport(e) => write!(f, "request failed: {e}"),
            ClientError::Api { status, code, message, .. } => write!(f, "{} {code}: {message}", status.as_u16()),
        }
    }
}

impl std::error::Error for ClientError {}

impl From<reqwest::Error> for ClientError {
    fn from(e: reqwest::Error) -> Self {
        ClientError::Transport(e)
    }
}

#[derive(Debug, Clone)]
pub struct Client {
    http: reqwest::Client,
    base: String,
    token: Option<String>,
}

impl Client {
    pub fn new(base: &str) -> Self {
        let http = reqwest::Client::builder().pool_max_idle_per_host(64).build().expect("http client");
        Self { http, base: format!("{}/v1", base.trim_end_matches('/')), token: None }
    }

    pub fn with_token(&self, token: impl Into<String>) -> Self {
        Self { token: Some(token.into()), ..self.clone() }
    }

    /// Logs in and returns a client carrying the session token.
    pub async fn login(&self, username: &str, credential: &str) -> Result<Self, ClientError> {
        let body = serde_json::json!({ "username": username, "credential": credential });
        let v = self.send(Method::POST, "/login", Some(&body)).await?;
        Ok(self.with_token(v["token"].as_str().unwrap_or_default()))
    }

    pub async fn get(&self, path: &str) -> Result<Value, ClientError> {
        self.send(Method::GET, path, None).await
    }

    /// POSTs `body`, resubmitting when the transaction lost an MVCC race.
    pub async fn post(&self, path: &str, body: &Value) -> Result<Value, ClientError> {
        self.mutate(Method::POST, path, body).await
    }

    pub async fn mutate(&self, method: Method, path: &str, body: &Value) -> Result<Value, ClientError> {
        let mut attempt = 0;
        loop {
            match self.send(method.clone(), path, Some(body)).await {
                Err(e) if e.code() == Some("MVCC_CONFLICT") && attempt + 1 < MVCC_ATTEMPTS => {
                    attempt += 1;
                    // Jitter keeps retries of colliding writers apart.
                    let ms = rand::random_range(1..=5 * u64::from(attempt.min(20)));
                    tokio::time::sleep(Duration::from_millis(ms)).await;
                }
                other => return other,
            }
        }
    }

    async fn send(&self, method: Method, path: &str, body: Option<&Value>) -> Result<Value, ClientError> {
        let mut req = self.http.request(method, format!("{}{path}", self.base));
        if let Some(t) = &self.token {
            req = req.bearer_auth(t);
        }
        if let Some(b) = body {
            req = req.json(b);
        }
        let resp = req.send().await?;
        let status = resp.status();
        let bytes = resp.bytes().await?;
        let v: Value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap_or(Value::Null) };
        if status.is_success() {
            return Ok(v);
        }
        let err = &v["error"];
        Err(ClientError::Api {
            status,
            code: err["code"].as_str().unwrap_or("HTTP_ERROR").to_owned(),
            message: err["message"].as_str().unwrap_or_else(|| status.canonical_reason().unwrap_or("")).to_owned(),
            details: err["details"].clone(),
        })
    }
}
