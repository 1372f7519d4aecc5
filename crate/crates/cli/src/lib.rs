//! Batch driver for the bill analysis pipeline.
//!
//! Commands run in order (ingest, filter, features, train, explain, report) against one
//! output directory. Each writes into its own folder and records content hashes in
//! `manifest.json`; a command whose inputs are unchanged is skipped.

pub mod commands;
pub mod config;
pub mod error;
pub mod workspace;

pub use commands::{synthesize, Command, Runner, Status};
pub use config::{ProviderMode, RunConfig};
pub use error::{CliError, ErrorRecord};
