use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use thiserror::Error;

use noisyrank_core::CoreError;

use crate::api::ResultView;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("invalid {field}: {detail}")]
    Validation { field: String, detail: String },
    #[error("no session {0:?}")]
    NotFound(String),
    /// The session is not in a state that allows the request. Finished
    /// sessions carry their final result.
    #[error("{detail}")]
    Conflict {
        detail: String,
        result: Option<Box<ResultView>>,
    },
    #[error("storage: {0}")]
    Storage(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl ServiceError {
    pub fn validation(field: impl Into<String>, detail: impl Into<String>) -> Self {
        ServiceError::Validation {
            field: field.into(),
            detail: detail.into(),
        }
    }

    pub fn conflict(detail: impl Into<String>) -> Self {
        ServiceError::Conflict {
            detail: detail.into(),
            result: None,
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::Validation { .. } => StatusCode::BAD_REQUEST,
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::Conflict { .. } => StatusCode::CONFLICT,
            ServiceError::Storage(_) | ServiceError::Core(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            ServiceError::Validation { .. } => "validation",
            ServiceError::NotFound(_) => "not_found",
            ServiceError::Conflict { .. } => "conflict",
            ServiceError::Storage(_) => "storage",
            ServiceError::Core(_) => "internal",
        }
    }
}

impl From<std::io::Error> for ServiceError {
    fn from(e: std::io::Error) -> Self {
        ServiceError::Storage(e.to_string())
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'static str,
    detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    field: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<&'a ResultView>,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: self.kind(),
            detail: match &self {
                ServiceError::Validation { detail, .. } => detail.clone(),
                other => other.to_string(),
            },
            field: match &self {
                ServiceError::Validation { field, .. } => Some(field),
                _ => None,
            },
            result: match &self {
                ServiceError::Conflict { result, .. } => result.as_deref(),
                _ => None,
            },
        };
        (self.status(), Json(body)).into_response()
    }
}
