//! Item drafting and sketch perception on top of a backend, with the
//! boundary checks every output must pass.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sketchgrade_core::item::{ItemMeta, PromptAssets};
use sketchgrade_core::srg::ValidationReport;
use sketchgrade_core::{validate_against_ontology, FeedbackParams, ItemSpec, ScoringParams, Srg, SrgRole};

use crate::audit::AuditLog;
use crate::backend::{FixtureBackend, PerceptionBackend, RemoteBackend, RubricRequest};
use crate::error::AgentError;
use crate::remote::EndpointConfig;

/// Builds a validated item from a rubric. Scoring and feedback parameters
/// start at their defaults.
pub fn rubric_to_item(req: &RubricRequest, backend: &dyn PerceptionBackend) -> Result<ItemSpec, AgentError> {
    if !backend.capabilities().rubric_parsing {
        return Err(AgentError::BackendUnavailable(format!("{} cannot parse rubrics", backend.id())));
    }
    let draft = backend.parse_rubric(req)?;
    let highest_bloom = draft
        .gold
        .max_bloom()
        .ok_or_else(|| AgentError::SchemaViolation { attempts: 1, message: "gold graph has no nodes".into() })?;
    let meta = ItemMeta {
        item_id: draft.gold.item_id().to_string(),
        prompt: PromptAssets { text: req.prompt_text.clone(), images: req.image_refs.clone() },
        rubric_text: req.rubric_text.clone(),
        highest_bloom,
        scoring: ScoringParams::default(),
        feedback: FeedbackParams::default(),
    };
    Ok(ItemSpec::new(meta, draft.gold, draft.ontology, draft.phi)?)
}

/// A perceived student graph with the concepts and relations it uses that
/// the item ontology does not know.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perception {
    pub srg: Srg,
    pub flags: ValidationReport,
}

pub fn sketch_to_srg(image_ref: &str, item: &ItemSpec, backend: &dyn PerceptionBackend) -> Result<Perception, AgentError> {
    if !backend.capabilities().sketch_perception {
        return Err(AgentError::BackendUnavailable(format!("{} cannot read sketches", backend.id())));
    }
    let srg = backend.perceive(image_ref, item)?.with_role(SrgRole::Student).with_item_id(item.id());
    let flags = validate_against_ontology(&srg, &item.ontology);
    if !flags.is_empty() {
        log::warn!("{image_ref}: {flags}");
    }
    Ok(Perception { srg, flags })
}

/// Perceives many sketches with at most `max_in_flight` requests at once.
/// Results keep the order of `image_refs`.
pub fn sketch_to_srg_batch(
    image_refs: &[String],
    item: &ItemSpec,
    backend: &dyn PerceptionBackend,
    max_in_flight: usize,
) -> Result<Vec<Result<Perception, AgentError>>, AgentError> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(max_in_flight.max(1))
        .build()
        .map_err(|e| AgentError::Config(e.to_string()))?;
    Ok(pool.install(|| image_refs.par_iter().map(|r| sketch_to_srg(r, item, backend)).collect()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendConfig {
    Fixture { root: PathBuf },
    Remote { endpoint: EndpointConfig },
}

/// Backends for rubric parsing and sketch perception. Both must be the
/// same backend and model; `perception` may be left out to reuse `rubric`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub rubric: BackendConfig,
    #[serde(default)]
    pub perception: Option<BackendConfig>,
    #[serde(default)]
    pub audit_log: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        match &self.perception {
            Some(p) if *p != self.rubric => Err(AgentError::Config(
                "rubric parsing and sketch perception must use the same backend and model".into(),
            )),
            _ => Ok(()),
        }
    }

    /// The single backend instance shared by both stages.
    pub fn build(&self) -> Result<Arc<dyn PerceptionBackend>, AgentError> {
        self.validate()?;
        Ok(match &self.rubric {
            BackendConfig::Fixture { root } => Arc::new(FixtureBackend::new(root)),
            BackendConfig::Remote { endpoint } => {
                let log = match &self.audit_log {
                    Some(p) => AuditLog::file(p)?,
                    None => AuditLog::memory(),
                };
                Arc::new(RemoteBackend::http(endpoint.clone(), Arc::new(log)))
            }
        })
    }
}
