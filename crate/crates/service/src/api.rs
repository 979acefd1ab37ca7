//! HTTP and server-sent-event API over the session store.
//!
//! Query windows are half-open `[from, to)` in seconds relative to the first
//! frame of the session. Frame, event and trajectory listings are JSON lines;
//! everything else is a single JSON document.

use std::convert::Infallible;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast::error::RecvError;
use truckmotion_core::area::HeatmapMetric;
use truckmotion_core::events::EventType;
use truckmotion_core::kinematics::ChainLatency;

use crate::analysis::{json_document, Analysis};
use crate::config::AnalysisConfig;
use crate::session::{persist, valid_session_id, LiveMessage, Session, SessionState, SessionStore};

pub const JSONL: &str = "application/x-ndjson";
pub const JSON: &str = "application/json";

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<SessionStore>,
    /// Finalized live sessions are written here when set.
    pub root: Option<PathBuf>,
}

impl AppState {
    pub fn new(store: SessionStore, root: Option<PathBuf>) -> Self {
        Self {
            store: Arc::new(store),
            root,
        }
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn unprocessable(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn body(content_type: &'static str, bytes: Arc<[u8]>) -> Response {
    ([(header::CONTENT_TYPE, content_type)], Body::from(bytes.to_vec())).into_response()
}

fn session(state: &AppState, id: &str) -> ApiResult<Arc<Session>> {
    state
        .store
        .get(id)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no session `{id}`")))
}

/// Runs `render` against the session analysis off the async runtime, caching
/// the result under `key` once the session is finalized.
async fn render(
    session: Arc<Session>,
    key: String,
    render: impl FnOnce(&Analysis) -> ApiResult<String> + Send + 'static,
) -> ApiResult<Arc<[u8]>> {
    tokio::task::spawn_blocking(move || {
        session.cached_response(&key, || {
            let analysis = session.analysis();
            let analysis = analysis.as_ref().as_ref().map_err(|e| ApiError::unprocessable(e.clone()))?;
            render(analysis).map(String::into_bytes)
        })
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

fn core_error(e: truckmotion_core::Error) -> ApiError {
    use truckmotion_core::Error as E;
    match e {
        E::InvalidWindow { .. } | E::EmptyWindow | E::Config(_) => ApiError::bad_request(e.to_string()),
        other => ApiError::unprocessable(other.to_string()),
    }
}

#[derive(Debug, Default, Deserialize)]
pub struct WindowQuery {
    pub from: Option<f64>,
    pub to: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
pub struct FramesQuery {
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub stride: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
pub struct EventsQuery {
    /// Comma-separated event type names.
    pub types: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
pub struct HeatmapQuery {
    pub metric: Option<String>,
    pub sector: Option<f64>,
    pub from: Option<f64>,
    pub to: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
pub struct CreateSession {
    pub id: Option<String>,
    #[serde(default)]
    pub config: Option<AnalysisConfig>,
}

#[derive(Debug, Serialize)]
struct LiveMeta {
    id: String,
    state: SessionState,
    latency: Option<ChainLatency>,
}

fn key(name: &str, parts: &[(&str, String)]) -> String {
    let mut k = name.to_string();
    for (p, v) in parts {
        k.push_str(&format!("|{p}={v}"));
    }
    k
}

fn opt(v: Option<impl ToString>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

async fn list_sessions(State(state): State<AppState>) -> ApiResult<Response> {
    let infos = tokio::task::spawn_blocking(move || state.store.list().iter().map(|s| s.info()).collect::<Vec<_>>())
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(body(JSON, json_document(&infos).into_bytes().into()))
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let s = session(&state, &id)?;
    let info = tokio::task::spawn_blocking(move || s.info())
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(body(JSON, json_document(&info).into_bytes().into()))
}

async fn frames(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<FramesQuery>,
) -> ApiResult<Response> {
    let stride = q.stride.unwrap_or(1);
    if stride == 0 {
        return Err(ApiError::bad_request("stride must be at least 1"));
    }
    let k = key("frames", &[("from", opt(q.from)), ("to", opt(q.to)), ("stride", stride.to_string())]);
    let bytes = render(session(&state, &id)?, k, move |a| {
        let w = a.window(q.from, q.to).map_err(core_error)?;
        Ok(a.frames_in(&w, stride))
    })
    .await?;
    Ok(body(JSONL, bytes))
}

fn parse_types(types: &str) -> ApiResult<Vec<EventType>> {
    types
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .flat_map(|t| match t {
            // both directions
            "fork_motion" => vec![Ok(EventType::LIFT), Ok(EventType::LOWER)],
            other => vec![other.parse::<EventType>().map_err(|e| ApiError::bad_request(e.to_string()))],
        })
        .collect()
}

async fn events(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<EventsQuery>,
) -> ApiResult<Response> {
    let types = q.types.as_deref().map(parse_types).transpose()?;
    let k = key("events", &[("types", opt(q.types.as_deref()))]);
    let bytes = render(session(&state, &id)?, k, move |a| Ok(a.events(types.as_deref()))).await?;
    Ok(body(JSONL, bytes))
}

async fn kpi(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<WindowQuery>,
) -> ApiResult<Response> {
    let k = key("kpi", &[("from", opt(q.from)), ("to", opt(q.to))]);
    let bytes = render(session(&state, &id)?, k, move |a| {
        let w = a.window(q.from, q.to).map_err(core_error)?;
        Ok(json_document(&a.kpi(&w).map_err(core_error)?))
    })
    .await?;
    Ok(body(JSON, bytes))
}

async fn heatmap(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<HeatmapQuery>,
) -> ApiResult<Response> {
    let metric: HeatmapMetric = q
        .metric
        .as_deref()
        .unwrap_or("dwell_time")
        .parse()
        .map_err(|e: truckmotion_core::Error| ApiError::bad_request(e.to_string()))?;
    let s = session(&state, &id)?;
    let sector = q.sector.unwrap_or(s.config.sector_size);
    if !(sector > 0.0 && sector.is_finite()) {
        return Err(ApiError::bad_request(format!("sector must be positive, got {sector}")));
    }
    let k = key(
        "heatmap",
        &[("metric", metric.to_string()), ("sector", sector.to_string()), ("from", opt(q.from)), ("to", opt(q.to))],
    );
    let bytes = render(s, k, move |a| {
        let w = a.window(q.from, q.to).map_err(core_error)?;
        Ok(json_document(&a.heatmap(metric, sector, &w).map_err(core_error)?))
    })
    .await?;
    Ok(body(JSON, bytes))
}

async fn trajectory(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<WindowQuery>,
) -> ApiResult<Response> {
    let k = key("trajectory", &[("from", opt(q.from)), ("to", opt(q.to))]);
    let bytes = render(session(&state, &id)?, k, move |a| {
        let w = a.window(q.from, q.to).map_err(core_error)?;
        Ok(a.trajectory(&w))
    })
    .await?;
    Ok(body(JSONL, bytes))
}

async fn create_session(State(state): State<AppState>, raw: axum::body::Bytes) -> ApiResult<Response> {
    let req: CreateSession = if raw.iter().all(u8::is_ascii_whitespace) {
        CreateSession::default()
    } else {
        serde_json::from_slice(&raw).map_err(|e| ApiError::bad_request(format!("invalid session request: {e}")))?
    };
    let config = req.config.unwrap_or_default();
    config.validate().map_err(|e| ApiError::bad_request(e.to_string()))?;
    if let Some(id) = &req.id {
        if !valid_session_id(id) {
            return Err(ApiError::bad_request(format!("invalid session id `{id}`")));
        }
    }
    let s = state
        .store
        .insert_live(req.id, config)
        .map_err(|e| ApiError::new(StatusCode::CONFLICT, e))?;
    Ok((StatusCode::CREATED, Json(s.info())).into_response())
}

async fn push_records(State(state): State<AppState>, Path(id): Path<String>, text: String) -> ApiResult<Response> {
    let s = session(&state, &id)?;
    let report = tokio::task::spawn_blocking(move || s.push_records(&text))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .ok_or_else(|| ApiError::new(StatusCode::CONFLICT, format!("session `{id}` is finalized")))?;
    Ok(Json(report).into_response())
}

async fn finalize(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let s = session(&state, &id)?;
    let flushed = s
        .finalize()
        .ok_or_else(|| ApiError::new(StatusCode::CONFLICT, format!("session `{id}` is already finalized")))?;
    if let Some(root) = state.root.clone() {
        let s2 = Arc::clone(&s);
        tokio::task::spawn_blocking(move || persist(&root, &s2))
            .await
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, format!("cannot persist session: {e}")))?;
    }
    let info = tokio::task::spawn_blocking(move || s.info())
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(Json(serde_json::json!({ "flushed_frames": flushed, "session": info })).into_response())
}

/// `meta` first, then one `frame` event per emitted frame and a final `end`.
/// Slow clients skip the frames that fell out of their buffer.
async fn live(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Sse<impl Stream<Item = Result<Event, Infallible>>>> {
    let s = session(&state, &id)?;
    // subscribe before reading the state so no frame falls in between
    let rx = s.subscribe();
    let meta = LiveMeta {
        id: s.id.clone(),
        state: s.state(),
        latency: s.latency(),
    };
    let first = Event::default()
        .event("meta")
        .data(serde_json::to_string(&meta).expect("meta serializes"));
    let finished = meta.state == SessionState::Finalized;
    let head = stream::iter([Ok(first)]);
    let tail = stream::unfold((rx, finished), |(mut rx, done)| async move {
        if done {
            return None;
        }
        loop {
            match rx.recv().await {
                Ok(LiveMessage::Frame(json)) => {
                    return Some((Ok(Event::default().event("frame").data(json.as_ref())), (rx, false)));
                }
                Ok(LiveMessage::End) | Err(RecvError::Closed) => {
                    return Some((Ok(Event::default().event("end").data("{}")), (rx, true)));
                }
                Err(RecvError::Lagged(_)) => continue,
            }
        }
    });
    let end_now = stream::iter(finished.then(|| Ok(Event::default().event("end").data("{}"))));
    Ok(Sse::new(head.chain(end_now).chain(tail)).keep_alive(KeepAlive::default()))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", get(list_sessions).post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/frames", get(frames))
        .route("/sessions/{id}/events", get(events))
        .route("/sessions/{id}/kpi", get(kpi))
        .route("/sessions/{id}/heatmap", get(heatmap))
        .route("/sessions/{id}/trajectory", get(trajectory))
        .route("/sessions/{id}/records", post(push_records))
        .route("/sessions/{id}/finalize", post(finalize))
        .route("/sessions/{id}/live", get(live))
        .with_state(state)
}
