use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use depdiag_core::session::SessionError;
use serde::de::DeserializeOwned;
use serde_json::json;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

use crate::service::{AnswerRequest, CreateSession, ExpandRequest, ObserveRequest, Service, ServiceError};

pub struct ApiError(ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError(e)
    }
}

fn status_of(e: &ServiceError) -> (StatusCode, &'static str) {
    use SessionError::*;
    match e {
        ServiceError::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
        ServiceError::BadRequest(_) => (StatusCode::BAD_REQUEST, "bad_request"),
        ServiceError::Program(_) | ServiceError::Wire(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_input"),
        ServiceError::Persist(_) => (StatusCode::INTERNAL_SERVER_ERROR, "persist"),
        ServiceError::Session(s) => match s {
            StaleAction(_) => (StatusCode::CONFLICT, "stale_action"),
            SessionFinished => (StatusCode::CONFLICT, "session_finished"),
            UnknownMethod(_) | Exec(_) | Observation(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_input"),
            InvalidAnswer(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_answer"),
            NotComposite(_) | UnknownComponent(_) | UnknownOccurrence(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_target"),
            Diagnosis(_) => (StatusCode::INTERNAL_SERVER_ERROR, "diagnosis"),
        },
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (code, kind) = status_of(&self.0);
        (code, Json(json!({ "error": self.0.to_string(), "kind": kind }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Any body that does not decode is a 400, whatever the reason.
fn body<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(bytes).map_err(|e| ApiError(ServiceError::BadRequest(e.to_string())))
}

/// Runs a session computation off the async workers.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.expect("session task panicked").map_err(ApiError)
}

async fn health(State(svc): State<Arc<Service>>) -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "sessions": svc.len() }))
}

async fn create(State(svc): State<Arc<Service>>, bytes: Bytes) -> ApiResult<(StatusCode, Json<serde_json::Value>)> {
    let req: CreateSession = body(&bytes)?;
    let view = blocking(move || svc.create(req)).await?;
    Ok((StatusCode::CREATED, Json(view)))
}

async fn view(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<Json<serde_json::Value>> {
    Ok(Json(svc.view(&id)?))
}

async fn report(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<Json<serde_json::Value>> {
    Ok(Json(svc.report(&id)?))
}

async fn snapshot(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<Json<crate::snapshot::Snapshot>> {
    Ok(Json(svc.snapshot(&id)?))
}

async fn answer(State(svc): State<Arc<Service>>, Path(id): Path<String>, bytes: Bytes) -> ApiResult<Json<serde_json::Value>> {
    let req: AnswerRequest = body(&bytes)?;
    Ok(Json(blocking(move || svc.answer(&id, &req)).await?))
}

async fn expand(State(svc): State<Arc<Service>>, Path(id): Path<String>, bytes: Bytes) -> ApiResult<Json<serde_json::Value>> {
    let req: ExpandRequest = body(&bytes)?;
    Ok(Json(blocking(move || svc.expand(&id, &req)).await?))
}

async fn observe(State(svc): State<Arc<Service>>, Path(id): Path<String>, bytes: Bytes) -> ApiResult<Json<serde_json::Value>> {
    let req: ObserveRequest = body(&bytes)?;
    Ok(Json(blocking(move || svc.observe(&id, &req)).await?))
}

async fn delete(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    svc.delete(&id)?;
    Ok(StatusCode::NO_CONTENT)
}

pub fn router(svc: Arc<Service>, allow_origin: &[String]) -> Router {
    let mut app = Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(view).delete(delete))
        .route("/sessions/{id}/answer", post(answer))
        .route("/sessions/{id}/expand", post(expand))
        .route("/sessions/{id}/observe", post(observe))
        .route("/sessions/{id}/report", get(report))
        .route("/sessions/{id}/snapshot", get(snapshot))
        .with_state(svc);
    if !allow_origin.is_empty() {
        let origin = if allow_origin.iter().any(|o| o == "*") {
            AllowOrigin::any()
        } else {
            AllowOrigin::list(allow_origin.iter().filter_map(|o| HeaderValue::from_str(o).ok()))
        };
        let cors = CorsLayer::new()
            .allow_origin(origin)
            .allow_methods([Method::GET, Method::POST, Method::DELETE])
            .allow_headers(Any);
        app = app.layer(cors);
    }
    app
}

pub async fn serve(svc: Arc<Service>, bind: &str, allow_origin: &[String]) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(svc, allow_origin))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
