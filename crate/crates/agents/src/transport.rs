//! Chat-completions transports: HTTP via `ureq`, and a scripted replay for
//! tests and recorded transcripts.

use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    /// A string, or a list of content parts (text and image references).
    pub content: Value,
}

impl ChatMessage {
    pub fn system(text: impl Into<String>) -> ChatMessage {
        ChatMessage { role: "system".into(), content: Value::String(text.into()) }
    }

    pub fn user(text: impl Into<String>) -> ChatMessage {
        ChatMessage { role: "user".into(), content: Value::String(text.into()) }
    }

    pub fn assistant(text: impl Into<String>) -> ChatMessage {
        ChatMessage { role: "assistant".into(), content: Value::String(text.into()) }
    }

    /// User turn with text followed by image URLs.
    pub fn user_with_images(text: impl Into<String>, images: &[String]) -> ChatMessage {
        if images.is_empty() {
            return ChatMessage::user(text);
        }
        let mut parts = vec![json!({"type": "text", "text": text.into()})];
        parts.extend(images.iter().map(|url| json!({"type": "image_url", "image_url": {"url": url}})));
        ChatMessage { role: "user".into(), content: Value::Array(parts) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub schema_name: String,
    pub schema: Value,
}

impl ChatRequest {
    /// The chat-completions request body.
    pub fn body(&self) -> Value {
        json!({
            "model": self.model,
            "messages": self.messages,
            "temperature": 0,
            "response_format": {
                "type": "json_schema",
                "json_schema": {"name": self.schema_name, "schema": self.schema}
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("network: {0}")]
    Network(String),
    #[error("timed out after {ms} ms")]
    Timeout { ms: u64 },
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
}

/// Sends one request and returns the raw response body.
pub trait ChatTransport: Send + Sync {
    fn send(&self, req: &ChatRequest) -> Result<String, TransportError>;
}

/// The assistant message text of a chat-completions response body.
pub fn extract_content(raw: &str) -> Result<String, String> {
    let v: Value = serde_json::from_str(raw).map_err(|e| format!("response body is not JSON: {e}"))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| "response has no choices[0].message.content".to_string())
}

/// Wraps assistant text in a minimal chat-completions response body.
pub fn completion_body(content: &str) -> String {
    json!({
        "object": "chat.completion",
        "choices": [{"index": 0, "message": {"role": "assistant", "content": content}, "finish_reason": "stop"}]
    })
    .to_string()
}

pub struct HttpTransport {
    url: String,
    token: Option<String>,
    timeout_ms: u64,
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(base_url: &str, token: Option<String>, timeout_ms: u64) -> HttpTransport {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        let url = format!("{}/chat/completions", base_url.trim_end_matches('/'));
        HttpTransport { url, token, timeout_ms, agent }
    }
}

impl ChatTransport for HttpTransport {
    fn send(&self, req: &ChatRequest) -> Result<String, TransportError> {
        let mut call = self.agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(t) = &self.token {
            call = call.header("Authorization", &format!("Bearer {t}"));
        }
        let mut resp = call.send(req.body().to_string()).map_err(|e| self.map_err(e))?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(|e| self.map_err(e))?;
        if !(200..300).contains(&status) {
            return Err(TransportError::Http { status, body });
        }
        Ok(body)
    }
}

impl HttpTransport {
    fn map_err(&self, e: ureq::Error) -> TransportError {
        match e {
            ureq::Error::Timeout(_) => TransportError::Timeout { ms: self.timeout_ms },
            ureq::Error::Io(io)
                if matches!(io.kind(), std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock) =>
            {
                TransportError::Timeout { ms: self.timeout_ms }
            }
            other => TransportError::Network(other.to_string()),
        }
    }
}

/// Replays a fixed sequence of raw bodies (or failures) and records the
/// requests it was sent.
#[derive(Default)]
pub struct ScriptedTransport {
    replies: Mutex<VecDeque<Result<String, TransportError>>>,
    seen: Mutex<Vec<ChatRequest>>,
}

impl ScriptedTransport {
    pub fn new(replies: impl IntoIterator<Item = Result<String, TransportError>>) -> ScriptedTransport {
        ScriptedTransport { replies: Mutex::new(replies.into_iter().collect()), seen: Mutex::default() }
    }

    /// Each string becomes the assistant content of a successful reply.
    pub fn contents<S: AsRef<str>>(contents: impl IntoIterator<Item = S>) -> ScriptedTransport {
        ScriptedTransport::new(contents.into_iter().map(|c| Ok(completion_body(c.as_ref()))))
    }

    pub fn requests(&self) -> Vec<ChatRequest> {
        self.seen.lock().unwrap_or_else(|p| p.into_inner()).clone()
    }
}

impl ChatTransport for ScriptedTransport {
    fn send(&self, req: &ChatRequest) -> Result<String, TransportError> {
        self.seen.lock().unwrap_or_else(|p| p.into_inner()).push(req.clone());
        self.replies
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .pop_front()
            .unwrap_or_else(|| Err(TransportError::Network("script exhausted".into())))
    }
}
