use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SrgError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("integrity error: {0}")]
    Integrity(String),
    #[error("unknown Bloom level {0:?}")]
    UnknownBloom(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OntologyError {
    #[error("ontology schema error: {0}")]
    Schema(String),
    #[error("ontology parent chain is cyclic through {0:?}")]
    Cycle(String),
    #[error("ontology must have exactly one root, found {0:?}")]
    MultipleRoots(Vec<String>),
    #[error("unknown concept {0:?}")]
    UnknownConcept(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GedError {
    #[error("exact edit distance limited to {limit} combined nodes, got {nodes}")]
    SizeLimitExceeded { nodes: usize, limit: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamError {
    #[error("invalid parameter: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoringError {
    #[error(transparent)]
    Ged(#[from] GedError),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("calibration needs at least one labeled record")]
    EmptyTrainingSet,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeedbackError {
    #[error("no hint template for {0}")]
    MissingTemplate(String),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ItemError {
    #[error(transparent)]
    Srg(#[from] SrgError),
    #[error(transparent)]
    Ontology(#[from] OntologyError),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("gold graph does not resolve in the item ontology: {0}")]
    UnresolvedGold(String),
    #[error("incomplete hint mapping: missing {0:?}")]
    IncompleteMapping(Vec<String>),
    #[error("item spec: {0}")]
    Invalid(String),
}
