use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::Json;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sketchgrade_core::feedback::{feedback_for, OverlayScript};
use sketchgrade_core::item::ItemSummary;
use sketchgrade_core::{
    similarity, FeedbackReport, ItemMeta, ItemSpec, PhiMap, SimilarityBreakdown, Srg, SrgRole, VisualHint,
};

use crate::error::ApiError;
use crate::session::{Session, SessionView, StepError, StepResponse, TraceView};
use crate::AppState;

fn item(state: &AppState, id: &str) -> Result<Arc<ItemSpec>, ApiError> {
    state.0.items.get(id).cloned().ok_or_else(|| ApiError::not_found("item", id))
}

fn authorized(state: &AppState, headers: &HeaderMap) -> bool {
    let Some(token) = state.0.config.token.as_deref() else { return false };
    headers
        .get(axum::http::header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .is_some_and(|t| t == token)
}

/// Parses and size-checks a student graph.
fn student_graph(state: &AppState, v: Value, item: &ItemSpec) -> Result<Srg, ApiError> {
    let g = Srg::from_value(v).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let cfg = &state.0.config;
    if g.node_count() > cfg.max_nodes || g.edge_count() > cfg.max_edges {
        return Err(ApiError::too_large(format!(
            "graph has {} nodes and {} edges; limits are {} and {}",
            g.node_count(),
            g.edge_count(),
            cfg.max_nodes,
            cfg.max_edges
        )));
    }
    if g.role() != SrgRole::Student {
        return Err(ApiError::bad_request("role must be \"student\""));
    }
    if g.item_id() != item.id() {
        return Err(ApiError::bad_request(format!("graph is for item {:?}, not {:?}", g.item_id(), item.id())));
    }
    Ok(g)
}

fn json_body(body: &Bytes) -> Result<Value, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid JSON: {e}")))
}

pub async fn list_items(State(state): State<AppState>) -> Json<Vec<ItemSummary>> {
    Json(state.0.items.values().map(|i| i.summary()).collect())
}

#[derive(Debug, Default, Deserialize)]
pub struct ItemQuery {
    #[serde(default)]
    include_gold: bool,
}

#[derive(Debug, Serialize)]
pub struct ItemView {
    #[serde(flatten)]
    meta: ItemMeta,
    ontology: Value,
    /// Present only for authorized `include_gold=true` requests.
    #[serde(skip_serializing_if = "Option::is_none")]
    gold: Option<Srg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phi: Option<Value>,
}

pub async fn get_item(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ItemQuery>,
    headers: HeaderMap,
) -> Result<Json<ItemView>, ApiError> {
    let item = item(&state, &id)?;
    let reveal = q.include_gold && authorized(&state, &headers);
    Ok(Json(ItemView {
        meta: item.meta.clone(),
        ontology: serde_json::from_str(&item.ontology.to_json()).unwrap_or(Value::Null),
        gold: reveal.then(|| item.gold.clone()),
        phi: reveal.then(|| phi_value(&item.phi)),
    }))
}

fn phi_value(phi: &PhiMap) -> Value {
    serde_json::from_str(&phi.to_json()).unwrap_or(Value::Null)
}

pub async fn score(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<SimilarityBreakdown>, ApiError> {
    let item = item(&state, &id)?;
    let gs = student_graph(&state, json_body(&body)?, &item)?;
    let b = similarity(&gs, &item.gold, &item.ontology, item.scoring()).map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(Json(b))
}

#[derive(Debug, Deserialize)]
pub struct CanvasQuery {
    #[serde(default = "default_w")]
    w: u32,
    #[serde(default = "default_h")]
    h: u32,
}

fn default_w() -> u32 {
    1000
}

fn default_h() -> u32 {
    800
}

#[derive(Debug, Serialize)]
pub struct FeedbackResponse {
    report: FeedbackReport,
    overlay: OverlayScript,
    hints: Vec<VisualHint>,
}

pub async fn feedback(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(c): Query<CanvasQuery>,
    body: Bytes,
) -> Result<Json<FeedbackResponse>, ApiError> {
    let item = item(&state, &id)?;
    let gs = student_graph(&state, json_body(&body)?, &item)?;
    if c.w == 0 || c.h == 0 {
        return Err(ApiError::bad_request("canvas size must be positive"));
    }
    let fb = feedback_for(&item, &gs, (c.w, c.h)).map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(Json(FeedbackResponse { report: fb.report, overlay: fb.overlay, hints: fb.hints }))
}

fn purge_idle(state: &AppState) {
    let timeout = state.0.config.idle_timeout;
    let mut map = state.0.sessions.lock().unwrap_or_else(|p| p.into_inner());
    map.retain(|_, s| s.lock().map(|s| s.touched.elapsed() <= timeout).unwrap_or(true));
}

fn session(state: &AppState, sid: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
    purge_idle(state);
    state
        .0
        .sessions
        .lock()
        .unwrap_or_else(|p| p.into_inner())
        .get(sid)
        .cloned()
        .ok_or_else(|| ApiError::not_found("session", sid))
}

pub async fn create_session(State(state): State<AppState>, body: Bytes) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let mut v = json_body(&body)?;
    let item_id = v
        .get("item_id")
        .and_then(Value::as_str)
        .ok_or_else(|| ApiError::bad_request("item_id is required"))?
        .to_string();
    let item = item(&state, &item_id)?;
    let initial = match v.get_mut("initial").map(Value::take) {
        Some(g) => student_graph(&state, g, &item)?,
        None => Srg::empty(item.id(), SrgRole::Student),
    };
    let id = uuid::Uuid::new_v4().to_string();
    let s = Session::start(id.clone(), &item, &initial).map_err(|e| ApiError::internal(e.to_string()))?;
    if let Some(j) = &state.0.journal {
        j.record("create", &s);
    }
    let view = s.view();
    purge_idle(&state);
    state.0.sessions.lock().unwrap_or_else(|p| p.into_inner()).insert(id, Arc::new(Mutex::new(s)));
    Ok((StatusCode::CREATED, Json(view)))
}

pub async fn get_session(State(state): State<AppState>, Path(sid): Path<String>) -> Result<Json<SessionView>, ApiError> {
    let s = session(&state, &sid)?;
    let s = s.lock().unwrap_or_else(|p| p.into_inner());
    Ok(Json(s.view()))
}

pub async fn step(
    State(state): State<AppState>,
    Path(sid): Path<String>,
    body: Bytes,
) -> Result<Json<StepResponse>, ApiError> {
    let s = session(&state, &sid)?;
    let mut v = json_body(&body)?;
    let revising = match v.get("t") {
        None | Some(Value::Null) => None,
        Some(t) => Some(t.as_u64().ok_or_else(|| ApiError::bad_request("t must be a non-negative integer"))? as usize),
    };
    let graph = v.get_mut("srg").map(Value::take).ok_or_else(|| ApiError::bad_request("srg is required"))?;
    let mut s = s.lock().unwrap_or_else(|p| p.into_inner());
    let item = item(&state, &s.item_id)?;
    let gs = student_graph(&state, graph, &item)?;
    let state_json = |s: &Session| serde_json::to_value(s.view()).unwrap_or(Value::Null);
    match s.step(&item, &gs, revising) {
        Ok(r) => {
            if let Some(j) = &state.0.journal {
                j.record("step", &s);
            }
            Ok(Json(r))
        }
        Err(StepError::Terminated) => Err(ApiError::conflict("session has terminated", state_json(&s))),
        Err(StepError::Stale { expected }) => {
            Err(ApiError::conflict(format!("iteration {expected} is the current one"), state_json(&s)))
        }
        Err(StepError::Engine(e)) => Err(ApiError::internal(e.to_string())),
    }
}

pub async fn trace(State(state): State<AppState>, Path(sid): Path<String>) -> Result<Json<TraceView>, ApiError> {
    let s = session(&state, &sid)?;
    let s = s.lock().unwrap_or_else(|p| p.into_inner());
    Ok(Json(s.trace()))
}
