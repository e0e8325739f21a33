//! HTTP API. Requests on one session are serialized by its lock; different
//! sessions run in parallel on the blocking pool.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use kbsel::consultant::{
    ConsultError, Consultant, KbSchema, OptimizeRequest, OptimizeResponse, Session, SetRequest, StateView,
    WireExplanation,
};
use serde::{Deserialize, Serialize};

use crate::events::{read_events, Event, EventLog};

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub kind: &'static str,
    pub message: String,
}

#[derive(Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, kind, message: message.into() }
    }
}

impl From<ConsultError> for ApiError {
    fn from(e: ConsultError) -> Self {
        use ConsultError::*;
        let (status, kind) = match &e {
            UnknownSymbol(_) => (StatusCode::NOT_FOUND, "unknown_symbol"),
            Hidden(_) => (StatusCode::BAD_REQUEST, "hidden"),
            Arity { .. } => (StatusCode::BAD_REQUEST, "arity"),
            Type { .. } => (StatusCode::BAD_REQUEST, "type"),
            NotNumeric(_) => (StatusCode::BAD_REQUEST, "not_numeric"),
            NotACandidate { .. } => (StatusCode::CONFLICT, "not_a_candidate"),
            NoUserAssignment(_) => (StatusCode::CONFLICT, "no_user_assignment"),
            NotPropagated(_) => (StatusCode::CONFLICT, "not_propagated"),
            Inconsistent => (StatusCode::CONFLICT, "inconsistent"),
            Consistent => (StatusCode::CONFLICT, "consistent"),
            Unbounded(_) => (StatusCode::UNPROCESSABLE_ENTITY, "unbounded"),
            NoOptimum(_) => (StatusCode::UNPROCESSABLE_ENTITY, "no_optimum"),
            Timeout => (StatusCode::SERVICE_UNAVAILABLE, "timeout"),
            Ground(_) | Solve(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        ApiError::new(status, kind, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(ErrorBody { error: self.kind.to_string(), message: self.message })).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

struct Entry {
    session: Session,
    created_ms: u64,
    updated_ms: u64,
}

pub struct AppState {
    kb_id: String,
    consultant: Arc<Consultant>,
    sessions: Mutex<HashMap<String, Arc<Mutex<Entry>>>>,
    log: Option<Mutex<EventLog>>,
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|p| p.into_inner())
}

impl AppState {
    /// State for one KB. With a log path, sessions recorded there are
    /// restored first; events that no longer apply are reported and skipped.
    pub fn new(kb_id: &str, consultant: Consultant, log: Option<&Path>) -> std::io::Result<(Self, Vec<String>)> {
        let state = AppState {
            kb_id: kb_id.to_string(),
            consultant: Arc::new(consultant),
            sessions: Mutex::new(HashMap::new()),
            log: None,
        };
        let mut warnings = Vec::new();
        let Some(path) = log else { return Ok((state, warnings)) };
        for e in read_events(path)? {
            if let Err(err) = state.replay(&e) {
                warnings.push(format!("skipped {e:?}: {}", err.message));
            }
        }
        Ok((AppState { log: Some(Mutex::new(EventLog::open(path)?)), ..state }, warnings))
    }

    fn replay(&self, e: &Event) -> Result<(), ApiError> {
        let c = &self.consultant;
        match e {
            Event::Create { session } => {
                let s = c.initial()?;
                let t = now_ms();
                lock(&self.sessions)
                    .insert(session.clone(), Arc::new(Mutex::new(Entry { session: s, created_ms: t, updated_ms: t })));
            }
            Event::Set { session, symbol, args, value } => {
                let entry = self.entry(session)?;
                let mut e = lock(&entry);
                let req = SetRequest { symbol: symbol.clone(), args: args.clone(), value: value.clone() };
                e.session = c.set(&e.session, &req)?;
            }
            Event::Retract { session, symbol, args } => {
                let entry = self.entry(session)?;
                let mut e = lock(&entry);
                e.session = c.retract(&e.session, symbol, args)?;
            }
        }
        Ok(())
    }

    fn entry(&self, id: &str) -> Result<Arc<Mutex<Entry>>, ApiError> {
        lock(&self.sessions)
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session `{id}`")))
    }

    fn record(&self, e: &Event) -> Result<(), ApiError> {
        if let Some(log) = &self.log {
            lock(log)
                .append(e)
                .map_err(|err| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "log", format!("event log: {err}")))?;
        }
        Ok(())
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> ApiResult<T> {
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map(Json),
        Err(e) => Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())),
    }
}

#[derive(Serialize, Deserialize)]
pub struct SessionPayload {
    pub id: String,
    pub kb: String,
    pub created_ms: u64,
    pub updated_ms: u64,
    pub view: StateView,
}

#[derive(Deserialize, Default)]
struct CreateRequest {
    kb: Option<String>,
}

/// Bodies are decoded by hand so malformed JSON gets the usual error body.
fn decode<T: serde::de::DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "json", e.to_string()))
}

async fn create_session(State(app): State<Arc<AppState>>, body: Bytes) -> ApiResult<SessionPayload> {
    let req: CreateRequest =
        if body.iter().all(u8::is_ascii_whitespace) { CreateRequest::default() } else { decode(&body)? };
    if let Some(kb) = req.kb.filter(|kb| *kb != app.kb_id) {
        return Err(ApiError::new(StatusCode::NOT_FOUND, "unknown_kb", format!("no knowledge base `{kb}`")));
    }
    blocking(move || {
        let session = app.consultant.initial()?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        app.record(&Event::Create { session: id.clone() })?;
        let t = now_ms();
        let view = session.view.clone();
        lock(&app.sessions).insert(id.clone(), Arc::new(Mutex::new(Entry { session, created_ms: t, updated_ms: t })));
        Ok(SessionPayload { id, kb: app.kb_id.clone(), created_ms: t, updated_ms: t, view })
    })
    .await
}

async fn get_session(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<SessionPayload> {
    let entry = app.entry(&id)?;
    let e = lock(&entry);
    Ok(Json(SessionPayload {
        id,
        kb: app.kb_id.clone(),
        created_ms: e.created_ms,
        updated_ms: e.updated_ms,
        view: e.session.view.clone(),
    }))
}

async fn set_value(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> ApiResult<StateView> {
    let req: SetRequest = decode(&body)?;
    let entry = app.entry(&id)?;
    blocking(move || {
        let mut e = lock(&entry);
        let next = app.consultant.set(&e.session, &req)?;
        if next.user != e.session.user {
            app.record(&Event::Set { session: id, symbol: req.symbol, args: req.args, value: req.value })?;
        }
        e.session = next;
        e.updated_ms = now_ms();
        Ok(e.session.view.clone())
    })
    .await
}

#[derive(Deserialize)]
struct ArgsQuery {
    #[serde(default)]
    args: Option<String>,
}

#[derive(Deserialize)]
struct SymbolQuery {
    symbol: String,
    #[serde(default)]
    args: Option<String>,
}

fn split_args(args: Option<&str>) -> Vec<String> {
    args.map(|a| a.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()).unwrap_or_default()
}

async fn retract_value(
    State(app): State<Arc<AppState>>,
    UrlPath((id, symbol)): UrlPath<(String, String)>,
    Query(q): Query<ArgsQuery>,
) -> ApiResult<StateView> {
    let entry = app.entry(&id)?;
    let args = split_args(q.args.as_deref());
    blocking(move || {
        let mut e = lock(&entry);
        let next = app.consultant.retract(&e.session, &symbol, &args)?;
        app.record(&Event::Retract { session: id, symbol, args })?;
        e.session = next;
        e.updated_ms = now_ms();
        Ok(e.session.view.clone())
    })
    .await
}

async fn explanation(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<SymbolQuery>,
) -> ApiResult<WireExplanation> {
    let entry = app.entry(&id)?;
    blocking(move || {
        let e = lock(&entry);
        Ok(app.consultant.explain(&e.session, &q.symbol, &split_args(q.args.as_deref()))?)
    })
    .await
}

async fn inconsistency(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<WireExplanation> {
    let entry = app.entry(&id)?;
    let e = lock(&entry);
    Ok(Json(app.consultant.inconsistency(&e.session)?))
}

async fn optimize(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> ApiResult<OptimizeResponse> {
    let req: OptimizeRequest = decode(&body)?;
    let entry = app.entry(&id)?;
    blocking(move || {
        let e = lock(&entry);
        Ok(app.consultant.optimize(&e.session, &req)?)
    })
    .await
}

#[derive(Serialize, Deserialize)]
pub struct SchemaPayload {
    pub kb: String,
    #[serde(flatten)]
    pub schema: KbSchema,
}

async fn schema(State(app): State<Arc<AppState>>) -> Json<SchemaPayload> {
    Json(SchemaPayload { kb: app.kb_id.clone(), schema: app.consultant.schema() })
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/assignments", post(set_value))
        .route("/sessions/{id}/assignments/{symbol}", delete(retract_value))
        .route("/sessions/{id}/explanation", get(explanation))
        .route("/sessions/{id}/inconsistency", get(inconsistency))
        .route("/sessions/{id}/optimize", post(optimize))
        .route("/kb/schema", get(schema))
        .with_state(state)
}

/// Serves until interrupted.
pub async fn serve(state: Arc<AppState>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
