//! JSON API over [`SessionService`].
//!
//! | method | path | |
//! |---|---|---|
//! | POST | `/api/sessions` | create, 201 |
//! | GET | `/api/sessions` | list |
//! | GET | `/api/sessions/{id}` | session view |
//! | GET | `/api/sessions/{id}/recommendation` | next arm |
//! | POST | `/api/sessions/{id}/rounds` | report a round |
//! | POST | `/api/sessions/{id}/close` | close |

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use flbandit_core::{AggregatorKind, ArmId, PolicyConfig};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;

use crate::error::SessionError;
use crate::model::RoundReport;
use crate::service::SessionService;

impl IntoResponse for SessionError {
    fn into_response(self) -> Response {
        let status = match &self {
            SessionError::Validation(_) => StatusCode::BAD_REQUEST,
            SessionError::NotFound(_) => StatusCode::NOT_FOUND,
            SessionError::Closed(_) => StatusCode::CONFLICT,
            SessionError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({ "error": self.to_string() }))).into_response()
    }
}

type ApiResult<T> = Result<T, SessionError>;
type Shared = State<Arc<SessionService>>;

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| SessionError::Validation(format!("invalid request body: {e}")))
}

#[derive(Debug, Deserialize)]
pub struct CreateSession {
    pub arms: Vec<ArmId>,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default = "default_aggregator")]
    pub aggregator: AggregatorKind,
    pub seed: Option<u64>,
}

fn default_aggregator() -> AggregatorKind {
    AggregatorKind::Average
}

async fn create(State(svc): Shared, body: Bytes) -> ApiResult<impl IntoResponse> {
    let req: CreateSession = parse_body(&body)?;
    let seed = req.seed.unwrap_or_else(|| uuid::Uuid::new_v4().as_u64_pair().0);
    let policy = PolicyConfig::new(req.epsilon, req.aggregator, seed)?;
    let session = svc.create_session(req.arms, policy)?;
    Ok((StatusCode::CREATED, Json(session.view())))
}

async fn list(State(svc): Shared) -> ApiResult<impl IntoResponse> {
    Ok(Json(svc.list_sessions()?))
}

async fn show(State(svc): Shared, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(svc.get_session(&id)?.view()))
}

async fn recommendation(State(svc): Shared, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(svc.recommend(&id)?))
}

async fn report(State(svc): Shared, Path(id): Path<String>, body: Bytes) -> ApiResult<impl IntoResponse> {
    // A closed or unknown session takes precedence over a malformed body.
    let current = svc.get_session(&id)?;
    if !current.is_active() {
        return Err(SessionError::Closed(id));
    }
    let report: RoundReport = parse_body(&body)?;
    Ok(Json(svc.report_round(&id, &report)?.view()))
}

async fn close(State(svc): Shared, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(svc.close_session(&id)?.view()))
}

pub fn router(service: Arc<SessionService>) -> Router {
    Router::new()
        .route("/api/sessions", post(create).get(list))
        .route("/api/sessions/{id}", get(show))
        .route("/api/sessions/{id}/recommendation", get(recommendation))
        .route("/api/sessions/{id}/rounds", post(report))
        .route("/api/sessions/{id}/close", post(close))
        .with_state(service)
}

/// Serves the API until the process is stopped.
pub async fn serve(addr: SocketAddr, service: Arc<SessionService>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(service)).await
}
