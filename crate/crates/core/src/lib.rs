pub mod codec;
pub mod config;
pub mod digest;
pub mod factcheck;
pub mod kv;
pub mod ledger;
pub mod platform;
pub mod scoring;
pub mod service;
pub mod txflow;

pub use digest::Digest;
