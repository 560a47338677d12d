//! Requester-facing HTTP API.
//!
//! `POST /v1/checks` takes `{product_uri, selector, profile?}` with the
//! installation id in `X-Installation-Id` (optionally `X-Requester-Country`)
//! and answers `202 {check_id}`. `GET /v1/checks/{id}` returns the check's
//! status, per-vantage canonical prices and gate verdict.

use axum::extract::{Path, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::checks::CheckService;
use super::{CheckRequest, PersonaProfile, VantageError};
use crate::extract::PriceSelector;

pub const INSTALLATION_HEADER: &str = "x-installation-id";
pub const COUNTRY_HEADER: &str = "x-requester-country";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubmitBody {
    pub product_uri: String,
    pub selector: PriceSelector,
    #[serde(default)]
    pub profile: Option<PersonaProfile>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmitResponse {
    pub check_id: String,
}

pub fn router(service: CheckService) -> Router {
    Router::new()
        .route("/v1/checks", post(submit))
        .route("/v1/checks/{id}", get(status))
        .route("/v1/vantages", get(vantages))
        .with_state(service)
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<VantageError> for ApiError {
    fn from(e: VantageError) -> Self {
        let code = match e {
            VantageError::InvalidUri(_) | VantageError::InvalidRequest(_) => StatusCode::BAD_REQUEST,
            VantageError::RateLimited(_) => StatusCode::TOO_MANY_REQUESTS,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(code, e.to_string())
    }
}

async fn submit(
    State(svc): State<CheckService>,
    headers: HeaderMap,
    Json(body): Json<SubmitBody>,
) -> Result<(StatusCode, Json<SubmitResponse>), ApiError> {
    let header = |name: &str| headers.get(name).and_then(|v| v.to_str().ok()).map(str::to_string);
    let requester = header(INSTALLATION_HEADER)
        .ok_or_else(|| ApiError(StatusCode::BAD_REQUEST, "missing X-Installation-Id".into()))?;
    let req = CheckRequest {
        product_uri: body.product_uri,
        selector: body.selector,
        requester,
        requester_country: header(COUNTRY_HEADER),
        submitted_at: Utc::now(),
        profile: body.profile,
    };
    let check_id = svc.submit_check(req)?;
    Ok((StatusCode::ACCEPTED, Json(SubmitResponse { check_id })))
}

async fn status(State(svc): State<CheckService>, Path(id): Path<String>) -> Result<Response, ApiError> {
    match svc.status(&id) {
        Some(s) => Ok(Json(s).into_response()),
        None => Err(ApiError(StatusCode::NOT_FOUND, format!("unknown check {id}"))),
    }
}

async fn vantages(State(svc): State<CheckService>) -> Response {
    Json(svc.pipeline().coordinator.vantages()).into_response()
}
