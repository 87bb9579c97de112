//! Structured-output calls with schema enforcement, bounded re-asks and one
//! audit record per attempt.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::audit::{now_millis, AgentRequestLog, AuditLog, Outcome};
use crate::error::AgentError;
use crate::prompts::PromptTemplate;
use crate::schema::ResponseSchema;
use crate::transport::{extract_content, ChatMessage, ChatRequest, ChatTransport, TransportError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub token_env: Option<String>,
    pub timeout_ms: u64,
    pub retries: usize,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            base_url: "http://127.0.0.1:8000/v1".into(),
            model: "gpt-4o".into(),
            token_env: Some("SKETCHGRADE_API_TOKEN".into()),
            timeout_ms: 60_000,
            retries: 2,
        }
    }
}

impl EndpointConfig {
    pub fn token(&self) -> Option<String> {
        self.token_env.as_deref().and_then(|k| std::env::var(k).ok()).filter(|t| !t.is_empty())
    }
}

/// A rendered prompt: the template it came from and the opening messages.
#[derive(Debug, Clone)]
pub struct Prompt {
    pub template: PromptTemplate,
    pub messages: Vec<ChatMessage>,
}

/// Sends `prompt` and returns the first reply that passes `schema`.
pub fn remote_call(
    transport: &dyn ChatTransport,
    backend_id: &str,
    endpoint: &EndpointConfig,
    prompt: &Prompt,
    schema: &ResponseSchema,
    retries: usize,
    log: &AuditLog,
) -> Result<Value, AgentError> {
    remote_call_with(transport, backend_id, endpoint, prompt, schema, retries, log, |v| Ok(v.clone()))
}

/// Like [`remote_call`], with a further `accept` check on schema-valid
/// replies. A failed check counts as a schema violation and its message is
/// fed back on the next attempt.
#[allow(clippy::too_many_arguments)]
pub fn remote_call_with<T>(
    transport: &dyn ChatTransport,
    backend_id: &str,
    endpoint: &EndpointConfig,
    prompt: &Prompt,
    schema: &ResponseSchema,
    retries: usize,
    log: &AuditLog,
    accept: impl Fn(&Value) -> Result<T, String>,
) -> Result<T, AgentError> {
    let mut messages = prompt.messages.clone();
    let attempts = retries + 1;
    for attempt in 1..=attempts {
        let req = ChatRequest {
            model: endpoint.model.clone(),
            messages: messages.clone(),
            schema_name: schema.name.to_string(),
            schema: schema.document.clone(),
        };
        let started = Instant::now();
        let sent = transport.send(&req);
        let latency_ms = started.elapsed().as_millis() as u64;
        let record = |response: String, outcome: Outcome, error: Option<String>| AgentRequestLog {
            timestamp: now_millis(),
            backend: backend_id.to_string(),
            model: endpoint.model.clone(),
            template: prompt.template.id(),
            template_sha256: prompt.template.sha256(),
            attempt,
            prompt: req.body(),
            response,
            latency_ms,
            outcome,
            error,
        };

        let raw = match sent {
            Ok(raw) => raw,
            Err(e) => {
                log.append(record(String::new(), Outcome::Failed, Some(e.to_string())))?;
                return Err(match e {
                    TransportError::Timeout { ms } => AgentError::Timeout { ms },
                    other => AgentError::Network(other.to_string()),
                });
            }
        };
        let checked = extract_content(&raw).and_then(|content| {
            let v: Value =
                serde_json::from_str(&content).map_err(|e| format!("reply is not a JSON object: {e}"))?;
            schema.check(&v)?;
            accept(&v).map(|t| (t, content))
        });
        match checked {
            Ok((t, _)) => {
                log.append(record(raw, Outcome::Ok, None))?;
                return Ok(t);
            }
            Err(msg) if attempt < attempts => {
                log::debug!("{backend_id}: attempt {attempt} rejected: {msg}");
                let content = extract_content(&raw).unwrap_or_else(|_| raw.clone());
                log.append(record(raw, Outcome::SchemaRetry, Some(msg.clone())))?;
                messages.push(ChatMessage::assistant(content));
                messages.push(ChatMessage::user(format!(
                    "Your reply was rejected: {msg}\nReply again with a single JSON object that satisfies the schema."
                )));
            }
            Err(msg) => {
                log.append(record(raw, Outcome::Failed, Some(msg.clone())))?;
                return Err(AgentError::SchemaViolation { attempts, message: msg });
            }
        }
    }
    unreachable!("the final attempt always returns")
}
