use std::path::Path;

use legis_core::attribution::AttributionError;
use legis_core::corpus::CorpusError;
use legis_core::features::FeatureError;
use legis_core::llmfilter::LlmError;
use legis_core::models::ModelError;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("`{command}` needs the outputs of `{needs}`: {reason}")]
    MissingPredecessor { command: String, needs: String, reason: String },
    #[error("output directory {0} is locked by another run (remove the lock file if no run is active)")]
    Locked(String),
    #[error("corpus is not admissible: {0} error finding(s), see ingest/validation.txt")]
    Inadmissible(usize),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Filter(#[from] LlmError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Attribution(#[from] AttributionError),
}

impl CliError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io { path: path.display().to_string(), message: e.to_string() }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::MissingPredecessor { .. } => "missing_predecessor",
            CliError::Locked(_) => "locked",
            CliError::Inadmissible(_) => "inadmissible_corpus",
            CliError::Corpus(_) => "corpus",
            CliError::Filter(_) => "filter",
            CliError::Features(_) => "features",
            CliError::Model(_) => "model",
            CliError::Attribution(_) => "attribution",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::MissingPredecessor { .. } => 3,
            CliError::Locked(_) => 4,
            CliError::Filter(_) => 5,
            _ => 1,
        }
    }

    /// Machine-readable form written to stderr on failure.
    pub fn record(&self, command: &str) -> ErrorRecord {
        ErrorRecord {
            command: command.to_string(),
            kind: self.kind(),
            message: self.to_string(),
            exit_code: self.exit_code(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub command: String,
    pub kind: &'static str,
    pub message: String,
    pub exit_code: i32,
}
