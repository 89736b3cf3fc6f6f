//! HTTP sessions over the transfer engine. Correspondence is computed once
//! per (session, reference, config); shade and part edits only recompose
//! and re-render.

mod error;
pub mod session;

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::{header, HeaderName, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine as _;
use serde::Deserialize;
use serde_json::json;
use spmt_core::{Settings, TransferRecipe};
use tower_http::cors::{AllowOrigin, CorsLayer};

pub use error::ApiError;
use session::{decode_face, Direction, Session, SessionStore};

pub const BODY_LIMIT: usize = 16 * 1024 * 1024;
pub const DEFAULT_TTL: Duration = Duration::from_secs(30 * 60);
pub const METRICS_HEADER: &str = "x-metrics";

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    pub settings: Settings,
    pub session_ttl: Duration,
    /// Allowed browser origin; any origin when `None`.
    pub cors_origin: Option<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            settings: Settings::default(),
            session_ttl: DEFAULT_TTL,
            cors_origin: None,
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    store: Arc<SessionStore>,
    settings: Arc<Settings>,
}

impl AppState {
    pub fn new(config: &ServiceConfig) -> Self {
        Self {
            store: Arc::new(SessionStore::new(config.session_ttl)),
            settings: Arc::new(config.settings.clone()),
        }
    }

    pub fn store(&self) -> &SessionStore {
        &self.store
    }

    fn session(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        self.store
            .get(id)
            .ok_or_else(|| ApiError::not_found(format!("unknown session {id}")))
    }
}

pub fn router(state: AppState, config: &ServiceConfig) -> Router {
    let origin = match &config.cors_origin {
        Some(o) => AllowOrigin::exact(HeaderValue::from_str(o).unwrap_or(HeaderValue::from_static("null"))),
        None => AllowOrigin::any(),
    };
    let cors = CorsLayer::new()
        .allow_origin(origin)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE])
        .expose_headers([HeaderName::from_static(METRICS_HEADER)]);
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/references", post(add_reference))
        .route("/sessions/{id}/transfer", post(transfer))
        .route("/sessions/{id}/stats", get(stats))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .layer(cors)
        .with_state(state)
}

/// Binds `addr` and serves until the process ends, sweeping idle sessions
/// once a minute.
pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    let state = AppState::new(&config);
    let store = state.store.clone();
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs(60));
        loop {
            tick.tick().await;
            store.evict_idle(Instant::now());
        }
    });
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state, &config)).await
}

async fn healthz() -> &'static str {
    "ok"
}

/// The `image` and `mask` parts of an upload.
async fn read_face_upload(mut form: Multipart) -> Result<(Bytes, Bytes), ApiError> {
    let (mut image, mut mask) = (None, None);
    while let Some(field) = form
        .next_field()
        .await
        .map_err(|e| ApiError::new(e.status(), format!("malformed multipart body: {}", e.body_text())))?
    {
        let name = field.name().unwrap_or_default().to_string();
        let data = field
            .bytes()
            .await
            .map_err(|e| ApiError::new(e.status(), format!("cannot read field {name}: {}", e.body_text())))?;
        match name.as_str() {
            "image" => image = Some(data),
            "mask" => mask = Some(data),
            other => log::debug!("ignoring multipart field {other}"),
        }
    }
    match (image, mask) {
        (Some(i), Some(m)) => Ok((i, m)),
        (None, _) => Err(ApiError::bad_request("missing multipart field image")),
        (_, None) => Err(ApiError::bad_request("missing multipart field mask")),
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

fn new_id() -> String {
    uuid::Uuid::new_v4().simple().to_string()
}

async fn create_session(State(state): State<AppState>, form: Multipart) -> Result<Response, ApiError> {
    let (image, mask) = read_face_upload(form).await?;
    let settings = state.settings.clone();
    let face = blocking(move || decode_face(&image, &mask, &settings)).await?;
    let session = state.store.insert(Session::new(new_id(), face));
    log::info!("session {} created", session.id);
    Ok((StatusCode::CREATED, Json(json!({ "id": session.id }))).into_response())
}

async fn add_reference(
    State(state): State<AppState>,
    Path(id): Path<String>,
    form: Multipart,
) -> Result<Response, ApiError> {
    let session = state.session(&id)?;
    let (image, mask) = read_face_upload(form).await?;
    let settings = state.settings.clone();
    let ref_id = blocking(move || {
        let face = decode_face(&image, &mask, &settings)?;
        let reference = session.add_reference(new_id(), face);
        session.reconstruction(&reference, Direction::Transfer, &settings)?;
        Ok(reference.id.clone())
    })
    .await?;
    Ok((StatusCode::CREATED, Json(json!({ "refId": ref_id }))).into_response())
}

#[derive(Debug, Default, Deserialize)]
struct TransferQuery {
    report: Option<String>,
}

async fn transfer(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<TransferQuery>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let session = state.session(&id)?;
    let text = std::str::from_utf8(&body).map_err(|_| ApiError::bad_request("recipe is not UTF-8"))?;
    let recipe = if text.trim().is_empty() {
        TransferRecipe::default()
    } else {
        TransferRecipe::from_json(text).map_err(|e| ApiError::bad_request(e.to_string()))?
    };
    let envelope = match query.report.as_deref() {
        None => false,
        Some("json") => true,
        Some(other) => return Err(ApiError::bad_request(format!("unknown report format {other}"))),
    };
    let settings = state.settings.clone();
    let rendered = blocking(move || session.transfer(&recipe, &settings)).await?;
    if envelope {
        let body = json!({
            "mimeType": "image/png",
            "image": base64::engine::general_purpose::STANDARD.encode(&rendered.png),
            "metrics": rendered.report,
        });
        return Ok(Json(body).into_response());
    }
    let metrics = serde_json::to_string(&rendered.report).map_err(|e| ApiError::internal(e.to_string()))?;
    let metrics = HeaderValue::from_str(&metrics).map_err(|e| ApiError::internal(e.to_string()))?;
    Ok((
        [
            (header::CONTENT_TYPE, HeaderValue::from_static("image/png")),
            (HeaderName::from_static(METRICS_HEADER), metrics),
        ],
        rendered.png,
    )
        .into_response())
}

async fn stats(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<session::Stats>, ApiError> {
    Ok(Json(state.session(&id)?.stats()))
}
