//! Perception backends turn rubric text into gold items and sketches into
//! student graphs. Every graph that leaves this crate has passed the JSON
//! schema and the core graph validation.

pub mod audit;
pub mod backend;
pub mod error;
pub mod pipeline;
pub mod prompts;
pub mod remote;
pub mod schema;
pub mod transport;

pub use audit::{AgentRequestLog, AuditLog, Outcome};
pub use backend::{Capabilities, FixtureBackend, PerceptionBackend, RemoteBackend, RubricRequest};
pub use error::AgentError;
pub use pipeline::{rubric_to_item, sketch_to_srg, sketch_to_srg_batch, BackendConfig, Perception, PipelineConfig};
pub use remote::{remote_call, remote_call_with, EndpointConfig};
pub use transport::{ChatMessage, ChatRequest, ChatTransport, HttpTransport, ScriptedTransport, TransportError};
