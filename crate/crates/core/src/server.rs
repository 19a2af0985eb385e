//! HTTP front end: `POST /ask`, `GET /kb/stats`, `GET /health`.

use std::net::SocketAddr;
use std::sync::{Arc, OnceLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::service::{Config, QaService, ServiceError};

/// Filled once the service has finished loading; until then every endpoint but `/health` answers 503.
pub type SharedService = Arc<OnceLock<Arc<QaService>>>;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AskRequest {
    pub question: String,
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

fn ready(state: &SharedService) -> Result<Arc<QaService>, Response> {
    state
        .get()
        .cloned()
        .ok_or_else(|| error(StatusCode::SERVICE_UNAVAILABLE, "knowledge base is still loading"))
}

async fn ask(State(state): State<SharedService>, body: Result<Json<AskRequest>, JsonRejection>) -> Response {
    let service = match ready(&state) {
        Ok(s) => s,
        Err(r) => return r,
    };
    let Json(request) = match body {
        Ok(b) => b,
        Err(e) => return error(StatusCode::BAD_REQUEST, e.body_text()),
    };
    match tokio::task::spawn_blocking(move || service.answer(&request.question)).await {
        Ok(answer) => Json(answer).into_response(),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn stats(State(state): State<SharedService>) -> Response {
    match ready(&state) {
        Ok(s) => Json(s.stats()).into_response(),
        Err(r) => r,
    }
}

async fn health(State(state): State<SharedService>) -> Response {
    let ready = state.get().is_some();
    Json(json!({ "status": "ok", "ready": ready })).into_response()
}

pub fn router(state: SharedService) -> Router {
    Router::new()
        .route("/ask", post(ask))
        .route("/kb/stats", get(stats))
        .route("/health", get(health))
        .with_state(state)
}

/// Router over an already loaded service.
pub fn router_for(service: QaService) -> Router {
    let state = SharedService::default();
    let _ = state.set(Arc::new(service));
    router(state)
}

pub async fn bind(config: &Config) -> Result<tokio::net::TcpListener, ServiceError> {
    let addr: SocketAddr = format!("{}:{}", config.host(), config.port())
        .parse()
        .map_err(|e| ServiceError::Config(format!("bad listen address: {e}")))?;
    tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServiceError::Io { path: addr.to_string().into(), source })
}

/// Start loading the service in the background and serve until the process ends.
pub async fn serve(listener: tokio::net::TcpListener, config: Config) -> Result<(), ServiceError> {
    let io = |source| ServiceError::Io { path: "listener".into(), source };
    let state = SharedService::default();
    let loading = {
        let state = state.clone();
        tokio::task::spawn_blocking(move || {
            QaService::from_config(&config).map(|s| {
                let _ = state.set(Arc::new(s));
            })
        })
    };
    let server = tokio::spawn(async move { axum::serve(listener, router(state)).await });
    match loading.await {
        Ok(Ok(())) => {}
        Ok(Err(e)) => return Err(e),
        Err(e) => return Err(ServiceError::Config(e.to_string())),
    }
    match server.await {
        Ok(served) => served.map_err(io),
        Err(e) => Err(ServiceError::Config(e.to_string())),
    }
}
