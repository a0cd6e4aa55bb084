//! News registration, sealed commit-reveal voting, quorum consensus,
//! credibility and token rewards, run as chaincode under [`crate::txflow`].

mod chaincode;
mod credibility;
mod error;
pub mod keys;
pub mod query;
mod tally;
mod types;

pub use chaincode::{ops, transient, FactCheckChaincode, VOTES_COLLECTION};
pub use credibility::update_credibility;
pub use error::FactCheckError;
pub use tally::{tally, EmptyVotes, TIE_PRECEDENCE};
pub use types::*;
