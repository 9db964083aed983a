//! HTTP/JSON front end for compass sessions and dataset audits.
//!
//! Every endpoint is a thin wrapper around `faircompass-core`; the service
//! keeps state but adds no decision logic of its own.

mod error;
mod store;

use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::routing::{get, post};
use axum::{Json, Router};
use faircompass_core::audit::AuditConfig;
use faircompass_core::compass::{
    load_tree, start_session, CompassTree, DecisionRecord, Node, TrailStep, TreeDocument,
};
use faircompass_core::ingest::SchemaMapping;
use faircompass_core::report::{audit_source, parse_definitions};
use faircompass_core::{AuditReport, FairnessDefinition, Family, OutcomeLabel};
use serde::{Deserialize, Serialize};
use tower_http::cors::{AllowOrigin, CorsLayer};

pub use error::{ApiError, ErrorBody};
use store::{SessionEntry, Store};

pub struct ServiceConfig {
    pub tree: CompassTree,
    pub idle_timeout: Duration,
    pub snapshot: Option<PathBuf>,
    /// Allowed browser origin; any origin when absent.
    pub ui_origin: Option<String>,
}

impl ServiceConfig {
    pub fn new(tree: CompassTree) -> Self {
        Self {
            tree,
            idle_timeout: Duration::from_secs(2 * 60 * 60),
            snapshot: None,
            ui_origin: None,
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    tree: Arc<CompassTree>,
    store: Arc<Mutex<Store>>,
}

impl AppState {
    /// Builds the state and restores the snapshot, if one is configured and present.
    pub fn new(config: &ServiceConfig) -> Result<Self, String> {
        let tree = Arc::new(config.tree.clone());
        let mut store = Store::new(tree.clone(), config.idle_timeout, config.snapshot.clone());
        store.load_snapshot()?;
        Ok(Self {
            tree,
            store: Arc::new(Mutex::new(store)),
        })
    }

    fn store(&self) -> std::sync::MutexGuard<'_, Store> {
        // a panicking handler cannot leave a session half-updated
        self.store.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn session_count(&self) -> usize {
        self.store().session_count()
    }
}

pub fn router(state: AppState, ui_origin: Option<&str>) -> Router {
    let origin = match ui_origin.and_then(|o| HeaderValue::from_str(o).ok()) {
        Some(o) => AllowOrigin::exact(o),
        None => AllowOrigin::any(),
    };
    let cors = CorsLayer::new()
        .allow_origin(origin)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE]);

    Router::new()
        .route("/healthz", get(healthz))
        .route("/tree", get(default_tree))
        .route("/trees/validate", post(validate_tree))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/tree", get(session_tree))
        .route("/sessions/{id}/answers", post(answer))
        .route("/sessions/{id}/undo", post(undo))
        .route("/sessions/{id}/record", get(record))
        .route("/audits", post(create_audit))
        .route("/audits/{id}", get(get_audit))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint") })
        .layer(cors)
        .with_state(state)
}

/// A session as the client sees it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub tree_version: String,
    pub context: String,
    pub current: Node,
    pub choices: Vec<String>,
    pub complete: bool,
    #[serde(default)]
    pub recommendation: Option<FairnessDefinition>,
    #[serde(default)]
    pub family: Option<Family>,
    /// Node ids from the root to the current node.
    pub path: Vec<String>,
    pub trail: Vec<TrailStep>,
}

fn view(id: &str, entry: &SessionEntry) -> SessionView {
    let tree = &entry.tree;
    let s = &entry.session;
    let current = s.current_node(tree).expect("sessions stay on their tree").clone();
    let recommendation = current.definition;
    SessionView {
        id: id.to_string(),
        tree_version: s.tree_version().to_string(),
        context: entry.context.clone(),
        choices: current.choices().into_iter().map(String::from).collect(),
        complete: recommendation.is_some(),
        recommendation,
        family: recommendation.map(FairnessDefinition::family),
        path: s
            .trail()
            .iter()
            .map(|t| t.node.clone())
            .chain(std::iter::once(current.id.clone()))
            .collect(),
        trail: s.trail().to_vec(),
        current,
    }
}

async fn healthz(State(state): State<AppState>) -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok", "tree_version": state.tree.version() }))
}

async fn default_tree(State(state): State<AppState>) -> Json<TreeDocument> {
    Json(state.tree.document().clone())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TreeSummary {
    pub valid: bool,
    pub version: String,
    pub nodes: usize,
    pub depth: usize,
}

async fn validate_tree(body: Bytes) -> Result<Json<TreeSummary>, ApiError> {
    let text = std::str::from_utf8(&body)
        .map_err(|_| ApiError::new(StatusCode::BAD_REQUEST, "invalid_body", "body is not UTF-8"))?;
    let tree = load_tree(text)?;
    Ok(Json(TreeSummary {
        valid: true,
        version: tree.version().to_string(),
        nodes: tree.nodes().len(),
        depth: tree.depth(),
    }))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NewSession {
    #[serde(default)]
    context: String,
    /// A custom tree document; the default tree when absent.
    #[serde(default)]
    tree: Option<serde_json::Value>,
}

async fn create_session(
    State(state): State<AppState>,
    body: Bytes,
) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let request: NewSession = if body.iter().all(u8::is_ascii_whitespace) {
        NewSession::default()
    } else {
        serde_json::from_slice(&body)
            .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_body", e.to_string()))?
    };
    let (tree, custom) = match request.tree {
        Some(doc) => (Arc::new(load_tree(&doc.to_string())?), true),
        None => (state.tree.clone(), false),
    };
    let session = start_session(&tree);
    let entry = SessionEntry::new(tree, custom, session, request.context);
    let shown = view("", &entry);
    let id = state.store().insert_session(entry);
    Ok((StatusCode::CREATED, Json(SessionView { id, ..shown })))
}

fn on_session<T>(
    state: &AppState,
    id: &str,
    f: impl FnOnce(&mut SessionEntry) -> Result<T, ApiError>,
) -> Result<T, ApiError> {
    state
        .store()
        .with_session(id, f)
        .unwrap_or_else(|| Err(ApiError::not_found("session", id)))
}

async fn get_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<SessionView>, ApiError> {
    on_session(&state, &id, |e| Ok(Json(view(&id, e))))
}

async fn session_tree(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<TreeDocument>, ApiError> {
    on_session(&state, &id, |e| Ok(Json(e.tree.document().clone())))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnswerRequest {
    pub label: String,
    #[serde(default)]
    pub rationale: String,
    /// Rejects the answer with 409 unless the session is still at this node.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_node: Option<String>,
}

async fn answer(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<AnswerRequest>, JsonRejection>,
) -> Result<Json<SessionView>, ApiError> {
    let Json(req) = body?;
    on_session(&state, &id, |e| {
        if let Some(expected) = &req.expected_node {
            if expected != e.session.current() {
                return Err(ApiError::new(
                    StatusCode::CONFLICT,
                    "stale_node",
                    format!(
                        "session is at {}, not {expected}",
                        e.session.current()
                    ),
                ));
            }
        }
        e.session.answer(&e.tree, &req.label, &req.rationale)?;
        Ok(Json(view(&id, e)))
    })
}

async fn undo(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<SessionView>, ApiError> {
    on_session(&state, &id, |e| {
        e.session.undo()?;
        Ok(Json(view(&id, e)))
    })
}

#[derive(Debug, Deserialize)]
struct RecordQuery {
    context: Option<String>,
}

async fn record(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<RecordQuery>,
) -> Result<Json<DecisionRecord>, ApiError> {
    on_session(&state, &id, |e| {
        let context = q.context.as_deref().unwrap_or(&e.context);
        Ok(Json(e.session.export_record(&e.tree, context)?))
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditRequest {
    /// Delimited text with a header row.
    pub dataset: String,
    pub schema: SchemaMapping,
    /// Definition names, or `["all"]`.
    pub definitions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub favourable: Option<OutcomeLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<AuditConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditResponse {
    pub id: String,
    pub report: AuditReport,
    pub text: String,
}

async fn create_audit(
    State(state): State<AppState>,
    body: Result<Json<AuditRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<AuditResponse>), ApiError> {
    let Json(req) = body?;
    let definitions = parse_definitions(&req.definitions.join(","))?;
    let mut config = req.config.unwrap_or_default();
    if let Some(t) = req.tolerance {
        config.tolerance = t;
    }
    let report = audit_source(&req.dataset, &req.schema, &definitions, &config, req.favourable)?;
    let (id, report) = state.store().insert_audit(report);
    Ok((StatusCode::CREATED, Json(response(id, &report))))
}

fn response(id: String, report: &AuditReport) -> AuditResponse {
    AuditResponse {
        id,
        text: report.render_text(),
        report: report.clone(),
    }
}

async fn get_audit(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<AuditResponse>, ApiError> {
    let report = state
        .store()
        .audit(&id)
        .ok_or_else(|| ApiError::not_found("audit", &id))?;
    Ok(Json(response(id, &report)))
}
