//! HTTP front end. Handlers decode the body, then run the blocking
//! [`Service`] call on the blocking pool.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{ErrorClass, ServiceError};
use crate::service::{IngestResponse, RecordsRequest, SearchRequest, Service};

pub struct ApiError(pub ServiceError);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.0.class.http_status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(json!({"error": self.0.code, "detail": self.0.detail}))).into_response()
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError(e)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AskRequest {
    question: String,
}

fn decode<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError(ServiceError::new(ErrorClass::Usage, "bad_json", e.to_string())))
}

async fn blocking<T, F>(service: Arc<Service>, f: F) -> Result<Json<T>, ApiError>
where
    T: Serialize + Send + 'static,
    F: FnOnce(&Service) -> Result<T, ServiceError> + Send + 'static,
{
    tokio::task::spawn_blocking(move || f(&service))
        .await
        .map_err(|e| ApiError(ServiceError::backend("internal", e.to_string())))?
        .map(Json)
        .map_err(ApiError)
}

async fn healthz() -> &'static str {
    "ok"
}

async fn search(State(s): State<Arc<Service>>, Path(name): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let req: SearchRequest = decode(&body)?;
    Ok(blocking(s, move |s| s.search(&name, &req)).await?.into_response())
}

async fn records(State(s): State<Arc<Service>>, Path(name): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let req: RecordsRequest = decode(&body)?;
    let out = blocking(s, move |s| {
        let items = s.parse_records(&name, req)?;
        Ok(IngestResponse {
            inserted: s.ingest(&name, items)?,
        })
    });
    Ok(out.await?.into_response())
}

async fn ask(State(s): State<Arc<Service>>, body: Bytes) -> Result<Response, ApiError> {
    let req: AskRequest = decode(&body)?;
    Ok(blocking(s, move |s| s.ask(&req.question)).await?.into_response())
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/collections/{name}/search", post(search))
        .route("/collections/{name}/records", post(records))
        .route("/ask", post(ask))
        .with_state(service)
}

pub async fn serve(service: Arc<Service>, listener: tokio::net::TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router(service)).await
}
