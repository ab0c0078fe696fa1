use affectcouple_core::Error;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

/// Body of every non-success response.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            code: code.to_string(),
            message: message.into(),
            detail: None,
        }
    }

    pub fn validation(message: impl Into<String>, detail: Option<&str>) -> Self {
        Self {
            detail: detail.map(String::from),
            ..Self::new(StatusCode::BAD_REQUEST, "VALIDATION", message)
        }
    }

    pub fn not_found(what: &str, id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "NOT_FOUND",
            format!("unknown {what} '{id}'"),
        )
    }
}

fn status_for(code: &str) -> StatusCode {
    match code {
        "UNKNOWN_TERM" => StatusCode::UNPROCESSABLE_ENTITY,
        "NOT_FOUND" => StatusCode::NOT_FOUND,
        "SESSION_CLOSED" | "ALREADY_ANNOTATED" | "DUPLICATE_ID" | "NO_REFERENCE" => StatusCode::CONFLICT,
        "IO" | "TAXONOMY" | "VERSION" => StatusCode::INTERNAL_SERVER_ERROR,
        _ => StatusCode::BAD_REQUEST,
    }
}

fn field_of(e: &Error) -> Option<String> {
    match e.root() {
        Error::Range { field, .. }
        | Error::NegativeSd { field, .. }
        | Error::Threshold { field, .. }
        | Error::Invalid { field, .. } => Some(field.to_string()),
        Error::Malformed { field, .. } => Some(field.clone()),
        Error::UnknownTerm(_) | Error::EmptyProfile => Some("tags".into()),
        Error::CandidateIndex { .. } => Some("index".into()),
        _ => None,
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let code = e.code();
        Self {
            status: status_for(code),
            code: code.to_string(),
            detail: field_of(&e),
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self)).into_response()
    }
}
