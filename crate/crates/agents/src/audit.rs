//! Append-only request log, one JSON object per line.

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Ok,
    SchemaRetry,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRequestLog {
    /// RFC 3339, UTC, millisecond precision.
    pub timestamp: String,
    pub backend: String,
    pub model: String,
    pub template: String,
    pub template_sha256: String,
    pub attempt: usize,
    pub prompt: Value,
    pub response: String,
    pub latency_ms: u64,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn now_millis() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// All appends go through one lock, so concurrent callers never interleave
/// lines. Records are also kept in memory for inspection.
#[derive(Default)]
pub struct AuditLog {
    inner: Mutex<Inner>,
}

#[derive(Default)]
struct Inner {
    sink: Option<BufWriter<File>>,
    records: Vec<AgentRequestLog>,
}

impl AuditLog {
    pub fn memory() -> AuditLog {
        AuditLog::default()
    }

    pub fn file(path: impl AsRef<Path>) -> std::io::Result<AuditLog> {
        let f = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(AuditLog { inner: Mutex::new(Inner { sink: Some(BufWriter::new(f)), records: Vec::new() }) })
    }

    pub fn append(&self, rec: AgentRequestLog) -> std::io::Result<()> {
        let mut inner = self.inner.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(sink) = inner.sink.as_mut() {
            serde_json::to_writer(&mut *sink, &rec)?;
            sink.write_all(b"\n")?;
            sink.flush()?;
        }
        inner.records.push(rec);
        Ok(())
    }

    pub fn records(&self) -> Vec<AgentRequestLog> {
        self.inner.lock().unwrap_or_else(|p| p.into_inner()).records.clone()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap_or_else(|p| p.into_inner()).records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Reads an NDJSON audit file back.
pub fn read_log(path: impl AsRef<Path>) -> std::io::Result<Vec<AgentRequestLog>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(std::io::Error::other))
        .collect()
}
