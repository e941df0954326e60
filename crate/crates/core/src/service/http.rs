//! HTTP and WebSocket API.
//!
//! | method | path | body | reply |
//! |---|---|---|---|
//! | POST | `/sessions` | [`CreateSession`] (optional) | 201 [`SessionSnapshot`] |
//! | GET | `/sessions` | | session ids |
//! | GET | `/sessions/{id}` | | [`SessionSnapshot`] |
//! | DELETE | `/sessions/{id}` | | 204 |
//! | POST | `/sessions/{id}/fault` | [`FaultRequest`] | 201 [`EventLogEntry`], 409 if a fault is active |
//! | POST | `/sessions/{id}/control` | [`ControlAction`] | [`SessionSnapshot`] |
//! | POST | `/sessions/{id}/diagnose` | | [`DiagnosisReport`], 409 without a model |
//! | GET | `/sessions/{id}/log` | | [`EventLogEntry`] list |
//! | GET | `/sessions/{id}/stream` | WebSocket upgrade | [`StreamMessage`] text frames |
//! | GET | `/sessions/{id}/events` | | server-sent events, one per [`StreamMessage`] |
//! | POST | `/models` | model JSON | 201 [`ModelSummary`] |
//! | GET | `/models/current` | | [`ModelSummary`], 404 without a model |
//!
//! Errors are `{"error": {"code": "...", "message": "..."}}`.

use std::collections::HashMap;
use std::convert::Infallible;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::Stream;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::net::TcpListener;
use tokio::sync::broadcast;

use super::events::{DiagnosisReport, EventLogEntry, StreamMessage};
use super::session::{ControlAction, FaultRequest, ModelStore, SessionConfig, SessionError, SessionHandle, SessionSnapshot};
use crate::error::Error;
use crate::pipeline::{DiagnosisModel, Metrics};
use crate::plantsim::{PlantConfig, ScenarioSpec};
use crate::rbfn::StopReason;

#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into() }
    }

    fn not_found(what: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("{what} not found"))
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let (status, code) = match &e {
            SessionError::FaultActive => (StatusCode::CONFLICT, "fault_active"),
            SessionError::Invalid(_) => (StatusCode::BAD_REQUEST, "invalid_request"),
            SessionError::NoModel => (StatusCode::CONFLICT, "no_model"),
            SessionError::Diagnosis(_) => (StatusCode::UNPROCESSABLE_ENTITY, "diagnosis_failed"),
            SessionError::Closed => (StatusCode::GONE, "session_closed"),
        };
        Self::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": { "code": self.code, "message": self.message } }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse_body<T: DeserializeOwned + Default>(body: &Bytes) -> ApiResult<T> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    parse_required(body)
}

fn parse_required<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_json", e.to_string()))
}

/// Body of `POST /sessions`. Every field is optional; omitted session
/// settings come from the server defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CreateSession {
    pub scenario: Option<ScenarioSpec>,
    pub plant: Option<PlantConfig>,
    pub tick_ms: Option<u64>,
    pub speed: Option<u32>,
    pub window: Option<usize>,
    pub stride: Option<usize>,
    pub paused: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub schema_version: u32,
    pub channel_order: Vec<String>,
    pub retained_components: usize,
    pub hidden_neurons: usize,
    pub stop_reason: StopReason,
    pub final_mse: f64,
    pub metrics: Metrics,
}

impl From<&DiagnosisModel> for ModelSummary {
    fn from(m: &DiagnosisModel) -> Self {
        Self {
            schema_version: m.schema_version,
            channel_order: m.channel_order.clone(),
            retained_components: m.pca.retained_count,
            hidden_neurons: m.network.hidden_count(),
            stop_reason: m.training.stop_reason,
            final_mse: m.training.final_mse(),
            metrics: m.metrics.clone(),
        }
    }
}

/// Shared server state: live sessions, the loaded model, and defaults for
/// new sessions.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    sessions: Mutex<HashMap<String, SessionHandle>>,
    models: ModelStore,
    plant: PlantConfig,
    defaults: SessionConfig,
    counter: AtomicU64,
}

impl AppState {
    pub fn new(plant: PlantConfig, defaults: SessionConfig, model: Option<DiagnosisModel>) -> Self {
        Self {
            inner: Arc::new(Inner {
                sessions: Mutex::new(HashMap::new()),
                models: Arc::new(std::sync::RwLock::new(model.map(Arc::new))),
                plant,
                defaults,
                counter: AtomicU64::new(1),
            }),
        }
    }

    pub fn models(&self) -> &ModelStore {
        &self.inner.models
    }

    /// Swap in a new model for every session.
    pub fn set_model(&self, model: DiagnosisModel) {
        let mut slot = self.inner.models.write().unwrap_or_else(|e| e.into_inner());
        *slot = Some(Arc::new(model));
    }

    pub fn current_model(&self) -> Option<Arc<DiagnosisModel>> {
        self.inner.models.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    fn session(&self, id: &str) -> ApiResult<SessionHandle> {
        self.inner
            .sessions
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(&format!("session {id}")))
    }

    fn next_id(&self) -> String {
        let n = self.inner.counter.fetch_add(1, Ordering::Relaxed);
        format!("s{n:04}-{:08x}", rand::random::<u32>())
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}", get(get_session).delete(delete_session))
        .route("/sessions/{id}/fault", post(inject_fault))
        .route("/sessions/{id}/control", post(control))
        .route("/sessions/{id}/diagnose", post(diagnose_now))
        .route("/sessions/{id}/log", get(event_log))
        .route("/sessions/{id}/stream", get(stream))
        .route("/sessions/{id}/events", get(sse_events))
        .route("/models", post(upload_model))
        .route("/models/current", get(current_model))
        .layer(DefaultBodyLimit::max(64 * 1024 * 1024))
        .with_state(state)
}

/// Bind `addr` and serve until the future is dropped. Binding errors (for
/// example a busy port) are returned before anything is served.
pub async fn serve(addr: SocketAddr, state: AppState) -> anyhow::Result<()> {
    let listener = TcpListener::bind(addr)
        .await
        .map_err(|e| anyhow::anyhow!("cannot bind {addr}: {e}"))?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    serve_on(listener, state).await
}

pub async fn serve_on(listener: TcpListener, state: AppState) -> anyhow::Result<()> {
    axum::serve(listener, router(state)).await?;
    Ok(())
}

async fn create_session(State(app): State<AppState>, body: Bytes) -> ApiResult<(StatusCode, Json<SessionSnapshot>)> {
    let req: CreateSession = parse_body(&body)?;
    let d = &app.inner.defaults;
    let cfg = SessionConfig {
        tick_ms: req.tick_ms.unwrap_or(d.tick_ms),
        speed: req.speed.unwrap_or(d.speed),
        window: req.window.unwrap_or(d.window),
        stride: req.stride.unwrap_or(d.stride),
        alarms: d.alarms,
        start_paused: req.paused.unwrap_or(d.start_paused),
    };
    let scenario = req.scenario.unwrap_or_else(ScenarioSpec::normal);
    let plant = req.plant.unwrap_or_else(|| app.inner.plant.clone());
    let id = app.next_id();
    let handle = SessionHandle::spawn(id.clone(), scenario, plant, cfg, app.inner.models.clone())?;
    let snapshot = handle.snapshot().await?;
    app.inner.sessions.lock().unwrap_or_else(|e| e.into_inner()).insert(id, handle);
    Ok((StatusCode::CREATED, Json(snapshot)))
}

async fn list_sessions(State(app): State<AppState>) -> Json<Vec<String>> {
    let mut ids: Vec<String> = app.inner.sessions.lock().unwrap_or_else(|e| e.into_inner()).keys().cloned().collect();
    ids.sort();
    Json(ids)
}

async fn get_session(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionSnapshot>> {
    Ok(Json(app.session(&id)?.snapshot().await?))
}

async fn delete_session(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    app.inner
        .sessions
        .lock()
        .unwrap_or_else(|e| e.into_inner())
        .remove(&id)
        .ok_or_else(|| ApiError::not_found(&format!("session {id}")))?;
    Ok(StatusCode::NO_CONTENT)
}

async fn inject_fault(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<EventLogEntry>)> {
    let req: FaultRequest = parse_required(&body)?;
    let entry = app.session(&id)?.inject(req).await?;
    Ok((StatusCode::CREATED, Json(entry)))
}

async fn control(State(app): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<SessionSnapshot>> {
    let action: ControlAction = parse_required(&body)?;
    Ok(Json(app.session(&id)?.control(action).await?))
}

async fn diagnose_now(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<DiagnosisReport>> {
    Ok(Json(app.session(&id)?.diagnose().await?))
}

async fn event_log(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Vec<EventLogEntry>>> {
    Ok(Json(app.session(&id)?.log().await?))
}

async fn stream(State(app): State<AppState>, Path(id): Path<String>, ws: WebSocketUpgrade) -> ApiResult<Response> {
    let rx = app.session(&id)?.subscribe();
    Ok(ws.on_upgrade(move |socket| forward(socket, rx)))
}

async fn forward(mut socket: WebSocket, mut rx: broadcast::Receiver<StreamMessage>) {
    loop {
        tokio::select! {
            msg = rx.recv() => match msg {
                Ok(msg) => {
                    if socket.send(Message::Text(msg.to_json().into())).await.is_err() {
                        return;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(n)) => {
                    tracing::debug!(skipped = n, "websocket subscriber lagged");
                }
                Err(broadcast::error::RecvError::Closed) => {
                    let _ = socket.send(Message::Close(None)).await;
                    return;
                }
            },
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
                Some(Ok(_)) => {}
            },
        }
    }
}

async fn sse_events(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Sse<impl Stream<Item = Result<Event, Infallible>>>> {
    let rx = app.session(&id)?.subscribe();
    let events = futures::stream::unfold(rx, |mut rx| async move {
        loop {
            match rx.recv().await {
                Ok(msg) => {
                    let name = match &msg {
                        StreamMessage::Frame(_) => "frame",
                        StreamMessage::Diagnosis(_) => "diagnosis",
                        StreamMessage::Event(_) => "event",
                    };
                    let event = Event::default().event(name).data(msg.to_json());
                    return Some((Ok(event), rx));
                }
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    });
    Ok(Sse::new(events).keep_alive(KeepAlive::default()))
}

async fn upload_model(State(app): State<AppState>, body: Bytes) -> ApiResult<(StatusCode, Json<ModelSummary>)> {
    let text = std::str::from_utf8(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_model", e.to_string()))?;
    let model = DiagnosisModel::from_json(text).map_err(|e| match e {
        Error::Version { .. } => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "unsupported_version", e.to_string()),
        e => ApiError::new(StatusCode::BAD_REQUEST, "invalid_model", e.to_string()),
    })?;
    let summary = ModelSummary::from(&model);
    app.set_model(model);
    tracing::info!(hidden = summary.hidden_neurons, "model loaded");
    Ok((StatusCode::CREATED, Json(summary)))
}

async fn current_model(State(app): State<AppState>) -> ApiResult<Json<ModelSummary>> {
    let model = app
        .current_model()
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "no_model", "no diagnosis model is loaded"))?;
    Ok(Json(ModelSummary::from(model.as_ref())))
}
