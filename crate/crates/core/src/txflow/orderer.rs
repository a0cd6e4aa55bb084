use std::collections::VecDeque;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use super::config::ClockMode;
use crate::ledger::TransactionEnvelope;

/// Cut a block at `max_txs` queued transactions, or once the oldest queued
/// transaction has waited `timeout`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockCutPolicy {
    pub max_txs: usize,
    pub timeout: Duration,
}

/// Single ordering service: a FIFO of endorsed envelopes.
#[derive(Debug)]
pub struct Orderer {
    queue: VecDeque<(TransactionEnvelope, Instant)>,
    policy: BlockCutPolicy,
}

impl Orderer {
    pub fn new(policy: BlockCutPolicy) -> Self {
        Self { queue: VecDeque::new(), policy }
    }

    pub fn enqueue(&mut self, tx: TransactionEnvelope, now: Instant) {
        self.queue.push_back((tx, now));
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    /// When the next block becomes due on timeout, if anything is queued.
    pub fn deadline(&self) -> Option<Instant> {
        self.queue.front().map(|(_, at)| *at + self.policy.timeout)
    }

    pub fn cut_due(&self, now: Instant) -> bool {
        self.queue.len() >= self.policy.max_txs || self.deadline().is_some_and(|d| now >= d)
    }

    /// Removes up to `max_txs` transactions in arrival order.
    pub fn cut(&mut self) -> Vec<TransactionEnvelope> {
        let n = self.queue.len().min(self.policy.max_txs);
        self.queue.drain(..n).map(|(tx, _)| tx).collect()
    }
}

/// Source of block timestamps. Only the orderer stamps blocks.
#[derive(Debug, Clone, Copy)]
pub struct BlockClock {
    mode: ClockMode,
}

impl BlockClock {
    pub fn new(mode: ClockMode) -> Self {
        Self { mode }
    }

    /// Timestamp for the block at `height`, never earlier than `prev_ms`.
    pub fn stamp(&self, height: u64, prev_ms: u64) -> u64 {
        match self.mode {
            ClockMode::Wall => {
                let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0);
                now.max(prev_ms)
            }
            ClockMode::Logical { start_ms, step_ms } => start_ms + height * step_ms,
        }
    }
}
