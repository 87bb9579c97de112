use sketchgrade_core::ItemError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("response violates the schema after {attempts} attempt(s): {message}")]
    SchemaViolation { attempts: usize, message: String },
    #[error("incomplete hint mapping: missing {0:?}")]
    IncompleteMapping(Vec<String>),
    #[error("network error: {0}")]
    Network(String),
    #[error("request timed out after {ms} ms")]
    Timeout { ms: u64 },
    #[error("invalid item draft: {0}")]
    Item(ItemError),
    #[error("configuration: {0}")]
    Config(String),
    #[error("audit log: {0}")]
    Log(#[from] std::io::Error),
}

impl From<ItemError> for AgentError {
    fn from(e: ItemError) -> Self {
        match e {
            ItemError::IncompleteMapping(keys) => AgentError::IncompleteMapping(keys),
            other => AgentError::Item(other),
        }
    }
}
