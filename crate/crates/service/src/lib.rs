//! HTTP façade over the scoring engine: item catalog, scoring, feedback
//! and revision-loop sessions.

mod error;
mod routes;
mod session;

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::DefaultBodyLimit;
use axum::routing::{get, post};
use axum::Router;
use sketchgrade_core::ItemSpec;

pub use error::ApiError;
pub use session::{Journal, SessionView, StepResponse, TraceView};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Bearer token that unlocks gold graphs; `None` never reveals them.
    pub token: Option<String>,
    pub max_nodes: usize,
    pub max_edges: usize,
    pub max_body_bytes: usize,
    pub idle_timeout: Duration,
    pub journal: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            token: None,
            max_nodes: 64,
            max_edges: 256,
            max_body_bytes: 1 << 20,
            idle_timeout: Duration::from_secs(3600),
            journal: None,
        }
    }
}

pub(crate) struct Inner {
    pub items: BTreeMap<String, Arc<ItemSpec>>,
    pub sessions: Mutex<HashMap<String, Arc<Mutex<session::Session>>>>,
    pub config: ServiceConfig,
    pub journal: Option<Journal>,
}

#[derive(Clone)]
pub struct AppState(pub(crate) Arc<Inner>);

impl AppState {
    pub fn new(items: impl IntoIterator<Item = ItemSpec>, config: ServiceConfig) -> std::io::Result<AppState> {
        let journal = config.journal.as_ref().map(Journal::open).transpose()?;
        let items = items.into_iter().map(|i| (i.id().to_string(), Arc::new(i))).collect();
        Ok(AppState(Arc::new(Inner { items, sessions: Mutex::default(), config, journal })))
    }
}

pub fn router(state: AppState) -> Router {
    let limit = state.0.config.max_body_bytes;
    Router::new()
        .route("/api/items", get(routes::list_items))
        .route("/api/items/{id}", get(routes::get_item))
        .route("/api/items/{id}/score", post(routes::score))
        .route("/api/items/{id}/feedback", post(routes::feedback))
        .route("/api/sessions", post(routes::create_session))
        .route("/api/sessions/{sid}", get(routes::get_session))
        .route("/api/sessions/{sid}/step", post(routes::step))
        .route("/api/sessions/{sid}/trace", get(routes::trace))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
