//! Revision-loop sessions and their journal.

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::json;
use sketchgrade_core::feedback::{loop_step, LoopIteration};
use sketchgrade_core::{FeedbackError, ItemSpec, SimilarityBreakdown, Srg, Termination, VisualHint};

pub(crate) struct Session {
    pub id: String,
    pub item_id: String,
    pub t_max: usize,
    pub iterations: Vec<LoopIteration>,
    pub terminated_by: Option<Termination>,
    pub created: DateTime<Utc>,
    pub updated: DateTime<Utc>,
    pub touched: Instant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub item_id: String,
    pub t: usize,
    pub t_max: usize,
    pub terminated: bool,
    pub terminated_by: Option<Termination>,
    pub breakdown: SimilarityBreakdown,
    pub hints: Vec<VisualHint>,
    pub created: DateTime<Utc>,
    pub updated: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResponse {
    pub session_id: String,
    pub t: usize,
    pub breakdown: SimilarityBreakdown,
    pub hints: Vec<VisualHint>,
    pub terminated: bool,
    pub terminated_by: Option<Termination>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceView {
    pub session_id: String,
    pub item_id: String,
    pub iterations: Vec<LoopIteration>,
    pub terminated_by: Option<Termination>,
    pub t_max: usize,
}

pub(crate) enum StepError {
    Terminated,
    Stale { expected: usize },
    Engine(FeedbackError),
}

impl Session {
    /// Scores the initial graph as iteration 0.
    pub fn start(id: String, item: &ItemSpec, gs: &Srg) -> Result<Session, FeedbackError> {
        let (it, met) = loop_step(item, 0, gs)?;
        let now = Utc::now();
        Ok(Session {
            id,
            item_id: item.id().to_string(),
            t_max: item.meta.feedback.t_max,
            iterations: vec![it],
            terminated_by: met.then_some(Termination::ThresholdMet),
            created: now,
            updated: now,
            touched: Instant::now(),
        })
    }

    pub fn t(&self) -> usize {
        self.iterations.len() - 1
    }

    fn last(&self) -> &LoopIteration {
        self.iterations.last().expect("sessions start with iteration 0")
    }

    /// Records the revision of iteration `revising` (the current index when
    /// given) as the next iteration.
    pub fn step(&mut self, item: &ItemSpec, gs: &Srg, revising: Option<usize>) -> Result<StepResponse, StepError> {
        if self.terminated_by.is_some() {
            return Err(StepError::Terminated);
        }
        if let Some(r) = revising {
            if r != self.t() {
                return Err(StepError::Stale { expected: self.t() });
            }
        }
        let t = self.t() + 1;
        let (it, met) = loop_step(item, t, gs).map_err(StepError::Engine)?;
        self.iterations.push(it);
        if met {
            self.terminated_by = Some(Termination::ThresholdMet);
        } else if t >= self.t_max {
            self.terminated_by = Some(Termination::MaxIterations);
        }
        self.updated = Utc::now();
        self.touched = Instant::now();
        Ok(self.step_response())
    }

    pub fn step_response(&self) -> StepResponse {
        let last = self.last();
        StepResponse {
            session_id: self.id.clone(),
            t: self.t(),
            breakdown: last.breakdown.clone(),
            hints: last.hints.clone(),
            terminated: self.terminated_by.is_some(),
            terminated_by: self.terminated_by,
        }
    }

    pub fn view(&self) -> SessionView {
        let last = self.last();
        SessionView {
            session_id: self.id.clone(),
            item_id: self.item_id.clone(),
            t: self.t(),
            t_max: self.t_max,
            terminated: self.terminated_by.is_some(),
            terminated_by: self.terminated_by,
            breakdown: last.breakdown.clone(),
            hints: last.hints.clone(),
            created: self.created,
            updated: self.updated,
        }
    }

    pub fn trace(&self) -> TraceView {
        TraceView {
            session_id: self.id.clone(),
            item_id: self.item_id.clone(),
            iterations: self.iterations.clone(),
            terminated_by: self.terminated_by,
            t_max: self.t_max,
        }
    }
}

/// Append-only NDJSON record of session events.
pub struct Journal {
    out: Mutex<BufWriter<File>>,
}

impl Journal {
    pub fn open(path: impl AsRef<Path>) -> std::io::Result<Journal> {
        let f = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Journal { out: Mutex::new(BufWriter::new(f)) })
    }

    pub(crate) fn record(&self, event: &str, s: &Session) {
        let last = s.last();
        let line = json!({
            "ts": Utc::now(),
            "event": event,
            "session_id": s.id,
            "item_id": s.item_id,
            "t": s.t(),
            "s": last.breakdown.s,
            "terminated_by": s.terminated_by,
            "srg": last.srg,
        });
        let mut out = self.out.lock().unwrap_or_else(|p| p.into_inner());
        let res = serde_json::to_writer(&mut *out, &line)
            .map_err(std::io::Error::other)
            .and_then(|_| out.write_all(b"\n"))
            .and_then(|_| out.flush());
        if let Err(e) = res {
            log::error!("journal write failed: {e}");
        }
    }
}
