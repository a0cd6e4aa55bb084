use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use axum::extract::{MatchedPath, Request, State};
use axum::middleware::Next;
use axum::response::Response;
use chrono::{SecondsFormat, Utc};
use parking_lot::Mutex;
use serde::Serialize;
use serde_json::json;

use super::AppState;

const MAX_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatencyStats {
    pub count: usize,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub p99_ms: f64,
    pub max_ms: f64,
}

/// Nearest-rank percentile of an ascending slice.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

impl LatencyStats {
    pub fn from_samples(samples: &[f64]) -> Self {
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        LatencyStats {
            count: s.len(),
            p50_ms: percentile(&s, 50.0),
            p95_ms: percentile(&s, 95.0),
            p99_ms: percentile(&s, 99.0),
            max_ms: s.last().copied().unwrap_or(0.0),
        }
    }
}

/// Per-route latency samples plus an optional JSON-lines request log.
#[derive(Debug, Default)]
pub struct Telemetry {
    samples: Mutex<BTreeMap<String, Vec<f64>>>,
    log: Option<Mutex<BufWriter<File>>>,
}

impl Telemetry {
    pub fn new(log_path: Option<&Path>) -> io::Result<Self> {
        let log = match log_path {
            Some(p) => {
                if let Some(dir) = p.parent() {
                    std::fs::create_dir_all(dir)?;
                }
                Some(Mutex::new(BufWriter::new(OpenOptions::new().create(true).append(true).open(p)?)))
            }
            None => None,
        };
        Ok(Self { samples: Mutex::default(), log })
    }

    pub fn record(&self, method: &str, route: &str, path: &str, status: u16, latency_ms: f64) {
        {
            let mut samples = self.samples.lock();
            let v = samples.entry(format!("{method} {route}")).or_default();
            if v.len() == MAX_SAMPLES {
                v.remove(0);
            }
            v.push(latency_ms);
        }
        if let Some(log) = &self.log {
            let line = json!({
                "ts": Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
                "method": method,
                "route": route,
                "path": path,
                "status": status,
                "latency_ms": latency_ms,
            });
            let mut w = log.lock();
            if writeln!(w, "{line}").and_then(|_| w.flush()).is_err() {
                tracing::warn!("request log write failed");
            }
        }
    }

    pub fn stats(&self) -> BTreeMap<String, LatencyStats> {
        self.samples.lock().iter().map(|(k, v)| (k.clone(), LatencyStats::from_samples(v))).collect()
    }
}

pub async fn track(State(state): State<Arc<AppState>>, req: Request, next: Next) -> Response {
    let method = req.method().to_string();
    let path = req.uri().path().to_owned();
    let route = req.extensions().get::<MatchedPath>().map(|m| m.as_str().to_owned()).unwrap_or_else(|| "unmatched".into());
    let start = Instant::now();
    let response = next.run(req).await;
    let ms = start.elapsed().as_secs_f64() * 1000.0;
    state.telemetry.record(&method, &route, &path, response.status().as_u16(), ms);
    response
}
