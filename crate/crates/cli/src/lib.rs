//! Operator tooling for the factledger network.

pub mod client;
pub mod corpus;
pub mod demo;
pub mod ingest;
pub mod verify;
pub mod voters;

use std::process::ExitCode;

/// A failed command and the exit code it maps to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Failure {
    Usage(String),
    Verification(String),
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Failure::Usage(_) => 1,
            Failure::Verification(_) => 2,
            Failure::Runtime(_) => 3,
        })
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Verification(m) | Failure::Runtime(m) => m,
        }
    }
}
