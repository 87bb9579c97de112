//! The backend contract and its two implementations: shipped fixtures and
//! a remote chat-completions model.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sketchgrade_core::item::ItemMeta;
use sketchgrade_core::{validate_against_ontology, ItemSpec, Ontology, PhiMap, Srg, SrgRole};

use crate::audit::AuditLog;
use crate::error::AgentError;
use crate::prompts::{RUBRIC_TO_ITEM, SKETCH_TO_SRG};
use crate::remote::{remote_call_with, EndpointConfig, Prompt};
use crate::schema::{rubric_schema, srg_schema};
use crate::transport::{ChatMessage, ChatTransport, HttpTransport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capabilities {
    pub rubric_parsing: bool,
    pub sketch_perception: bool,
}

impl Capabilities {
    pub const ALL: Capabilities = Capabilities { rubric_parsing: true, sketch_perception: true };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RubricRequest {
    pub item_id: String,
    pub rubric_text: String,
    pub prompt_text: String,
    #[serde(default)]
    pub image_refs: Vec<String>,
}

/// What a backend reads out of a rubric, before item assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct RubricDraft {
    pub ontology: Ontology,
    pub gold: Srg,
    pub phi: PhiMap,
}

pub trait PerceptionBackend: Send + Sync {
    fn id(&self) -> &str;
    fn model_version(&self) -> &str;
    fn capabilities(&self) -> Capabilities;
    fn parse_rubric(&self, req: &RubricRequest) -> Result<RubricDraft, AgentError>;
    fn perceive(&self, image_ref: &str, item: &ItemSpec) -> Result<Srg, AgentError>;
}

/// Serves graphs from a pack directory (`<root>/<item_id>/...`). Rubrics are
/// matched on their text, sketches on `[sketch://][<item_id>/]<sample_id>[.ext]`.
pub struct FixtureBackend {
    root: PathBuf,
    caps: Capabilities,
}

impl FixtureBackend {
    pub fn new(root: impl Into<PathBuf>) -> FixtureBackend {
        FixtureBackend { root: root.into(), caps: Capabilities::ALL }
    }

    pub fn with_capabilities(mut self, caps: Capabilities) -> FixtureBackend {
        self.caps = caps;
        self
    }

    fn item_dirs(&self) -> Vec<PathBuf> {
        let mut dirs: Vec<PathBuf> = fs::read_dir(&self.root)
            .map(|rd| rd.filter_map(Result::ok).map(|e| e.path()).filter(|p| p.join("item.json").is_file()).collect())
            .unwrap_or_default();
        dirs.sort();
        dirs
    }
}

fn read(path: &Path) -> Result<String, AgentError> {
    fs::read_to_string(path).map_err(|e| AgentError::BackendUnavailable(format!("{}: {e}", path.display())))
}

fn fixture_violation(path: &Path, e: impl std::fmt::Display) -> AgentError {
    AgentError::SchemaViolation { attempts: 1, message: format!("{}: {e}", path.display()) }
}

impl PerceptionBackend for FixtureBackend {
    fn id(&self) -> &str {
        "fixture"
    }

    fn model_version(&self) -> &str {
        "fixture-1"
    }

    fn capabilities(&self) -> Capabilities {
        self.caps
    }

    fn parse_rubric(&self, req: &RubricRequest) -> Result<RubricDraft, AgentError> {
        let wanted = req.rubric_text.trim();
        let dir = self
            .item_dirs()
            .into_iter()
            .find(|d| {
                read(&d.join("item.json"))
                    .ok()
                    .and_then(|t| serde_json::from_str::<ItemMeta>(&t).ok())
                    .is_some_and(|m| m.rubric_text.trim() == wanted)
            })
            .ok_or_else(|| AgentError::BackendUnavailable("no fixture matches this rubric".into()))?;
        let p = dir.join("ontology.json");
        let ontology = Ontology::from_json(&read(&p)?).map_err(|e| fixture_violation(&p, e))?;
        let p = dir.join("gold.srg.json");
        let gold = Srg::from_json(&read(&p)?).map_err(|e| fixture_violation(&p, e))?;
        let p = dir.join("phi.json");
        let phi = PhiMap::from_json(&read(&p)?).map_err(|e| fixture_violation(&p, e))?;
        Ok(RubricDraft { ontology, gold, phi })
    }

    fn perceive(&self, image_ref: &str, item: &ItemSpec) -> Result<Srg, AgentError> {
        let stripped = image_ref.strip_prefix("sketch://").unwrap_or(image_ref);
        let mut parts: Vec<&str> = stripped.split('/').filter(|s| !s.is_empty()).collect();
        let file = parts.pop().unwrap_or_default();
        let sample = file.split('.').next().unwrap_or_default();
        let item_id = parts.last().copied().unwrap_or(item.id());
        let path = self.root.join(item_id).join("samples").join(format!("{sample}.srg.json"));
        if sample.is_empty() || !path.is_file() {
            return Err(AgentError::BackendUnavailable(format!("no fixture sketch for {image_ref:?}")));
        }
        Srg::from_json(&read(&path)?).map_err(|e| fixture_violation(&path, e))
    }
}

/// A chat-completions model with structured output.
pub struct RemoteBackend {
    id: String,
    endpoint: EndpointConfig,
    transport: Box<dyn ChatTransport>,
    log: Arc<AuditLog>,
}

impl RemoteBackend {
    pub fn http(endpoint: EndpointConfig, log: Arc<AuditLog>) -> RemoteBackend {
        let transport = HttpTransport::new(&endpoint.base_url, endpoint.token(), endpoint.timeout_ms);
        RemoteBackend::with_transport(endpoint, Box::new(transport), log)
    }

    pub fn with_transport(endpoint: EndpointConfig, transport: Box<dyn ChatTransport>, log: Arc<AuditLog>) -> RemoteBackend {
        RemoteBackend { id: format!("remote:{}", endpoint.model), endpoint, transport, log }
    }

    pub fn log(&self) -> &AuditLog {
        &self.log
    }

    fn call<T>(&self, prompt: Prompt, schema: &crate::schema::ResponseSchema, accept: impl Fn(&Value) -> Result<T, String>) -> Result<T, AgentError> {
        remote_call_with(
            self.transport.as_ref(),
            &self.id,
            &self.endpoint,
            &prompt,
            schema,
            self.endpoint.retries,
            &self.log,
            accept,
        )
    }
}

const SYSTEM: &str = "You are a careful science education assistant. You reply with a single JSON object and nothing else.";

impl PerceptionBackend for RemoteBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn model_version(&self) -> &str {
        &self.endpoint.model
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities::ALL
    }

    fn parse_rubric(&self, req: &RubricRequest) -> Result<RubricDraft, AgentError> {
        let images = req.image_refs.join(", ");
        let text = RUBRIC_TO_ITEM.render(&[
            ("prompt_text", &req.prompt_text),
            ("rubric_text", &req.rubric_text),
            ("image_refs", if images.is_empty() { "none" } else { &images }),
            ("item_id", &req.item_id),
        ]);
        let prompt = Prompt {
            template: RUBRIC_TO_ITEM,
            messages: vec![ChatMessage::system(SYSTEM), ChatMessage::user_with_images(text, &req.image_refs)],
        };
        self.call(prompt, rubric_schema(), |v| {
            let ontology = Ontology::from_json(&v["ontology"].to_string()).map_err(|e| format!("ontology: {e}"))?;
            let gold = Srg::from_value(v["gold"].clone()).map_err(|e| format!("gold: {e}"))?;
            srg_schema().check(&v["gold"]).map_err(|e| format!("gold: {e}"))?;
            if gold.role() != SrgRole::Gold {
                return Err("gold: role must be \"gold\"".into());
            }
            if gold.item_id() != req.item_id {
                return Err(format!("gold: item_id must be {:?}", req.item_id));
            }
            if gold.is_empty() {
                return Err("gold: graph has no nodes".into());
            }
            let report = validate_against_ontology(&gold, &ontology);
            if !report.is_empty() {
                return Err(format!("gold: {report}"));
            }
            let phi = PhiMap::from_json(&v["phi"].to_string()).map_err(|e| format!("phi: {e}"))?;
            Ok(RubricDraft { ontology, gold, phi })
        })
    }

    fn perceive(&self, image_ref: &str, item: &ItemSpec) -> Result<Srg, AgentError> {
        let concepts: Vec<&str> = item.ontology.concepts().collect();
        let relations: Vec<&str> = item.ontology.relations().collect();
        let text = SKETCH_TO_SRG.render(&[
            ("item_id", item.id()),
            ("prompt_text", &item.meta.prompt.text),
            ("concepts", &concepts.join(", ")),
            ("relations", &relations.join(", ")),
        ]);
        let prompt = Prompt {
            template: SKETCH_TO_SRG,
            messages: vec![ChatMessage::system(SYSTEM), ChatMessage::user_with_images(text, &[image_ref.to_string()])],
        };
        self.call(prompt, srg_schema(), |v| {
            let g = Srg::from_value(v.clone()).map_err(|e| e.to_string())?;
            if g.role() != SrgRole::Student {
                return Err("role must be \"student\"".into());
            }
            if g.item_id() != item.id() {
                return Err(format!("item_id must be {:?}", item.id()));
            }
            Ok(g)
        })
    }
}
