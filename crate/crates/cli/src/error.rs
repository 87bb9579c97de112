use std::path::PathBuf;

use serde_json::json;
use sketchgrade_core::{FeedbackError, ItemError, ScoringError, SrgError};
use sketchgrade_harness::HarnessError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Json { path: PathBuf, message: String },
    #[error(transparent)]
    Srg(#[from] SrgError),
    #[error(transparent)]
    Item(#[from] ItemError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Feedback(#[from] FeedbackError),
    #[error("{0}")]
    Usage(String),
}

fn item_kind(e: &ItemError) -> &'static str {
    match e {
        ItemError::Srg(_) => "SrgError",
        ItemError::Ontology(_) => "OntologyError",
        ItemError::Params(_) => "ParamError",
        ItemError::UnresolvedGold(_) => "UnresolvedGold",
        ItemError::IncompleteMapping(_) => "IncompleteMapping",
        ItemError::Invalid(_) => "SpecValidationError",
    }
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "IoError",
            CliError::Json { .. } => "JsonError",
            CliError::Srg(_) => "SrgError",
            CliError::Item(e) => item_kind(e),
            CliError::Harness(HarnessError::SpecValidation { source, .. }) => item_kind(source),
            CliError::Harness(HarnessError::Layout(_)) => "LayoutError",
            CliError::Harness(_) => "HarnessError",
            CliError::Scoring(_) => "ScoringError",
            CliError::Feedback(_) => "FeedbackError",
            CliError::Usage(_) => "UsageError",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    /// One-line JSON for stderr.
    pub fn to_json(&self) -> String {
        json!({"error": {"kind": self.kind(), "message": self.to_string()}}).to_string()
    }
}
