//! HTTP routes over [`Service`].

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::service::{ConfigPatch, FieldError, Service, ServiceError};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    prompt: String,
    #[serde(default)]
    config: Option<ConfigPatch>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Followup {
    prompt: String,
}

#[derive(Debug, Serialize)]
struct Created {
    session_id: String,
}

#[derive(Debug, Serialize)]
struct Accepted {
    session_id: String,
    round: u32,
}

pub fn router(service: Service) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/tools", get(tools))
        .route("/sessions", post(create).get(list))
        .route("/sessions/{id}", get(status))
        .route("/sessions/{id}/trace", get(trace))
        .route("/sessions/{id}/map", get(map))
        .route("/sessions/{id}/followup", post(followup))
        .fallback(|| async { error(StatusCode::NOT_FOUND, "not_found", "no such route".into(), Vec::new()) })
        .with_state(service)
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    service: Service,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(service)).with_graceful_shutdown(shutdown).await
}

fn error(status: StatusCode, code: &str, message: String, details: Vec<FieldError>) -> Response {
    let mut body = json!({ "error": code, "message": message });
    if !details.is_empty() {
        body["details"] = serde_json::to_value(details).expect("field errors serialize");
    }
    (status, Json(body)).into_response()
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let message = self.to_string();
        match self {
            ServiceError::NotFound(_) => error(StatusCode::NOT_FOUND, "session_not_found", message, Vec::new()),
            ServiceError::MapNotReady(_) => error(StatusCode::NOT_FOUND, "map_not_ready", message, Vec::new()),
            ServiceError::Busy { .. } => error(StatusCode::CONFLICT, "round_in_flight", message, Vec::new()),
            ServiceError::Invalid(details) => error(StatusCode::UNPROCESSABLE_ENTITY, "invalid_request", message, details),
            ServiceError::Store(e) => {
                tracing::error!(error = %e, "store failure");
                error(StatusCode::INTERNAL_SERVER_ERROR, "storage_error", message, Vec::new())
            }
        }
    }
}

/// JSON path of a deserialization error, e.g. `$.config.seed`. Missing
/// fields are reported at the field itself rather than its parent.
fn json_path(path: &serde_path_to_error::Path, message: &str) -> String {
    let mut out = String::from("$");
    for seg in path.iter() {
        match seg {
            serde_path_to_error::Segment::Seq { index } => out.push_str(&format!("[{index}]")),
            serde_path_to_error::Segment::Map { key } => {
                out.push('.');
                out.push_str(key);
            }
            serde_path_to_error::Segment::Enum { variant } => {
                out.push('.');
                out.push_str(variant);
            }
            serde_path_to_error::Segment::Unknown => {}
        }
    }
    if let Some(name) = message.strip_prefix("missing field `").and_then(|r| r.split('`').next()) {
        out.push('.');
        out.push_str(name);
    }
    out
}

fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T, ServiceError> {
    let value: Value = serde_json::from_slice(body).map_err(|e| {
        ServiceError::Invalid(vec![FieldError {
            path: "$".into(),
            message: format!("body is not valid JSON: {e}"),
        }])
    })?;
    if !value.is_object() {
        return Err(ServiceError::Invalid(vec![FieldError {
            path: "$".into(),
            message: "body must be a JSON object".into(),
        }]));
    }
    serde_path_to_error::deserialize(value).map_err(|e| {
        let message = e.inner().to_string();
        ServiceError::Invalid(vec![FieldError {
            path: json_path(e.path(), &message),
            message,
        }])
    })
}

fn check_prompt(prompt: &str) -> Result<(), ServiceError> {
    if prompt.trim().is_empty() {
        return Err(ServiceError::Invalid(vec![FieldError {
            path: "$.prompt".into(),
            message: "must not be empty".into(),
        }]));
    }
    Ok(())
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static,
) -> Result<T, ServiceError> {
    tokio::task::spawn_blocking(f).await.expect("blocking task panicked")
}

async fn healthz() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

async fn tools(State(service): State<Service>) -> Json<Value> {
    let registry = service.registry();
    let tools: Value = serde_json::from_str(&registry.to_json()).expect("registry serializes");
    Json(json!({
        "registry": tools,
        "documentation": pcg_core::registry::render_documentation(registry),
    }))
}

async fn create(State(service): State<Service>, body: Bytes) -> Result<Response, ServiceError> {
    let req: CreateSession = parse_body(&body)?;
    check_prompt(&req.prompt)?;
    let config = req
        .config
        .unwrap_or_default()
        .apply(service.defaults())
        .map_err(ServiceError::Invalid)?;
    let session_id = blocking(move || service.create_session(&req.prompt, config)).await?;
    Ok((StatusCode::CREATED, Json(Created { session_id })).into_response())
}

async fn list(State(service): State<Service>) -> Json<Value> {
    Json(json!({ "sessions": service.list() }))
}

async fn status(State(service): State<Service>, Path(id): Path<String>) -> Result<Response, ServiceError> {
    Ok(Json(service.status(&id)?).into_response())
}

async fn trace(State(service): State<Service>, Path(id): Path<String>) -> Result<Response, ServiceError> {
    Ok(Json(service.trace(&id)?).into_response())
}

async fn map(State(service): State<Service>, Path(id): Path<String>) -> Result<Response, ServiceError> {
    let body = service.map(&id)?;
    Ok(([(header::CONTENT_TYPE, "application/json")], body.to_string()).into_response())
}

async fn followup(
    State(service): State<Service>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ServiceError> {
    service.status(&id)?;
    let req: Followup = parse_body(&body)?;
    check_prompt(&req.prompt)?;
    let round = blocking({
        let id = id.clone();
        move || service.followup(&id, &req.prompt)
    })
    .await?;
    Ok((StatusCode::ACCEPTED, Json(Accepted { session_id: id, round })).into_response())
}
