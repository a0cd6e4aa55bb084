//! Registers every corpus entry through `POST /v1/news`.

use std::io::Write;

use futures::stream::{self, StreamExt};
use serde::Serialize;
use serde_json::json;

use crate::client::{Client, ClientError};
use crate::corpus::{CorpusEntry, CorpusLine};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EntryOutcome {
    Registered { news_id: String, block: u64 },
    Duplicate { news_id: String },
    Failed { reason: String },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct IngestSummary {
    pub total: usize,
    pub registered: usize,
    pub duplicates: usize,
    pub failed: usize,
}

async fn register(client: &Client, e: &CorpusEntry) -> EntryOutcome {
    let body = json!({
        "content": e.content,
        "created_at": e.created_at,
        "author": e.author,
        "platform": e.platform,
    });
    match client.post("/news", &body).await {
        Ok(v) => EntryOutcome::Registered {
            news_id: v["news_id"].as_str().unwrap_or_default().to_owned(),
            block: v["block"].as_u64().unwrap_or_default(),
        },
        Err(ClientError::Api { code, details, .. }) if code == "DUPLICATE_NEWS" => {
            EntryOutcome::Duplicate { news_id: details["news_id"].as_str().unwrap_or_default().to_owned() }
        }
        Err(e) => EntryOutcome::Failed { reason: e.to_string() },
    }
}

/// Submits up to `concurrency` entries at a time and writes one result line
/// per entry, in file order.
pub async fn ingest(client: &Client, lines: Vec<CorpusLine>, concurrency: usize, out: &mut impl Write) -> IngestSummary {
    let mut summary = IngestSummary { total: lines.len(), ..Default::default() };
    let mut results = stream::iter(lines)
        .map(|(line, entry)| async move {
            match entry {
                Ok(e) => {
                    let outcome = register(client, &e).await;
                    (line, e.external_id, outcome)
                }
                Err(reason) => (line, "-".to_owned(), EntryOutcome::Failed { reason }),
            }
        })
        .buffered(concurrency.max(1));
    while let Some((line, id, outcome)) = results.next().await {
        let text = match &outcome {
            EntryOutcome::Registered { news_id, block } => {
                summary.registered += 1;
                format!("registered {news_id} block {block}")
            }
            EntryOutcome::Duplicate { news_id } => {
                summary.duplicates += 1;
                format!("duplicate {news_id}")
            }
            EntryOutcome::Failed { reason } => {
                summary.failed += 1;
                format!("failed {reason}")
            }
        };
        let _ = writeln!(out, "line {line} {id}: {text}");
    }
    summary
}
