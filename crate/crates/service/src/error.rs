use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use iw_core::{Error, IngestError, StoryError};
use serde::Serialize;
use serde_json::{json, Value};

/// Error body returned by every endpoint: `{code, message, detail}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub message: String,
    pub detail: Value,
}

#[derive(Serialize)]
struct Body<'a> {
    code: &'a str,
    message: &'a str,
    detail: &'a Value,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code: code.to_owned(),
            message: message.into(),
            detail: Value::Null,
        }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }

    pub fn bad_request(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Body {
            code: &self.code,
            message: &self.message,
            detail: &self.detail,
        };
        (self.status, Json(body)).into_response()
    }
}

fn ingest_detail(e: &IngestError) -> Value {
    match e {
        IngestError::Empty => json!({"kind": "empty"}),
        IngestError::NoRows => json!({"kind": "no_rows"}),
        IngestError::Ragged { line, expected, found } => {
            json!({"kind": "ragged", "line": line, "expected": expected, "found": found})
        }
        IngestError::BadNumber { line, column, value } => {
            json!({"kind": "bad_number", "line": line, "column": column, "value": value})
        }
        IngestError::Csv(m) => json!({"kind": "csv", "reason": m}),
        IngestError::Schema(m) => json!({"kind": "schema", "reason": m}),
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match &e {
            Error::Ingest(i) => ApiError::bad_request("ingest", message).with_detail(ingest_detail(i)),
            Error::InvalidLocator(_) => ApiError::bad_request("invalid_locator", message),
            Error::EmptySubspace(_) | Error::Lookup(_) => ApiError::not_found(message),
            Error::Story(s) => match s {
                StoryError::NodeNotFound(n) => ApiError::not_found(message).with_detail(json!({"node": n})),
                StoryError::DuplicateInsight(_) => ApiError::new(StatusCode::CONFLICT, "duplicate_insight", message),
                StoryError::UnknownInsight(_) => ApiError::bad_request("unknown_insight", message),
                StoryError::Cycle { node, parent } => ApiError::new(StatusCode::CONFLICT, "cycle", message)
                    .with_detail(json!({"node": node, "parent": parent})),
                StoryError::Import(_) => ApiError::bad_request("story_import", message),
            },
            Error::Provider { provider, retryable, .. } => ApiError::new(StatusCode::BAD_GATEWAY, "provider", message)
                .with_detail(json!({"provider": provider, "retryable": retryable})),
            Error::Config(_) => ApiError::bad_request("config", message),
            Error::Json(_) => ApiError::bad_request("json", message),
            Error::Alignment(_) | Error::Reasoning(_) | Error::Parse(_) | Error::EmptySubset | Error::Io(_) => {
                ApiError::internal(message)
            }
        }
    }
}
