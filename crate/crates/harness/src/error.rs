use std::path::PathBuf;

use sketchgrade_core::{ItemError, ScoringError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("pack layout: {0}")]
    Layout(String),
    #[error("item {item}: {source}")]
    SpecValidation {
        item: String,
        #[source]
        source: ItemError,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error("table: {0}")]
    Table(String),
}
