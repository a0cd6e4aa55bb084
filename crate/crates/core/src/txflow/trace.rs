use std::collections::VecDeque;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::Path;

use parking_lot::Mutex;

use crate::digest::Digest;
use crate::ledger::Validity;

const MEMORY_EVENTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stage {
    Endorsed { orgs: Vec<String> },
    Rejected { reason: String },
    Ordered { height: u64, index: u32 },
    Committed { height: u64, validity: Validity },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub tx_id: Digest,
    pub stage: Stage,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let id = self.tx_id.to_hex();
        match &self.stage {
            Stage::Endorsed { orgs } => write!(f, "endorsed {id} by={}", orgs.join(",")),
            Stage::Rejected { reason } => write!(f, "rejected {id} reason={reason}"),
            Stage::Ordered { height, index } => write!(f, "ordered {id} at={height}:{index}"),
            Stage::Committed { height, validity } => match validity {
                Validity::Invalid(r) => write!(f, "committed {id} height={height} invalid={r}"),
                v => write!(f, "committed {id} height={height} {}", if v.is_valid() { "valid" } else { "pending" }),
            },
        }
    }
}

/// Lifecycle trace: one line per stage per transaction.
#[derive(Debug, Default)]
pub struct TraceLog {
    recent: Mutex<VecDeque<TraceEvent>>,
    file: Mutex<Option<File>>,
}

impl TraceLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn to_file(path: impl AsRef<Path>) -> io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { recent: Mutex::default(), file: Mutex::new(Some(file)) })
    }

    pub fn record(&self, tx_id: Digest, stage: Stage) {
        let event = TraceEvent { tx_id, stage };
        if let Some(f) = self.file.lock().as_mut() {
            if let Err(e) = writeln!(f, "{event}") {
                tracing::warn!("trace log write failed: {e}");
            }
        }
        let mut recent = self.recent.lock();
        if recent.len() == MEMORY_EVENTS {
            recent.pop_front();
        }
        recent.push_back(event);
    }

    pub fn events_for(&self, tx_id: &Digest) -> Vec<TraceEvent> {
        self.recent.lock().iter().filter(|e| &e.tx_id == tx_id).cloned().collect()
    }
}
