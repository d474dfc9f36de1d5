use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use flowar_core::experiment::ExperimentError;
use serde::{Deserialize, Serialize};

/// Fixed set of error codes returned by the API.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorCode {
    DatasetNotFound,
    RunNotFound,
    FoldNotFound,
    InvalidConfig,
    InvalidDay,
    RunNotDone,
    IncomparableRuns,
    CorruptRunFile,
    Internal,
}

/// JSON error body: `{"http_status": 404, "code": "RunNotFound", "message": "..."}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub http_status: u16,
    pub code: ErrorCode,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: ErrorCode, message: impl Into<String>) -> Self {
        ApiError { http_status: status.as_u16(), code, message: message.into() }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, ErrorCode::Internal, message)
    }
}

impl From<ExperimentError> for ApiError {
    fn from(e: ExperimentError) -> Self {
        let (status, code) = match &e {
            ExperimentError::DatasetNotFound(_) => (StatusCode::NOT_FOUND, ErrorCode::DatasetNotFound),
            ExperimentError::RunNotFound(_) => (StatusCode::NOT_FOUND, ErrorCode::RunNotFound),
            ExperimentError::RunNotDone(_) => (StatusCode::CONFLICT, ErrorCode::RunNotDone),
            ExperimentError::IncomparableRuns { .. } => (StatusCode::UNPROCESSABLE_ENTITY, ErrorCode::IncomparableRuns),
            ExperimentError::InvalidConfig(_) => (StatusCode::BAD_REQUEST, ErrorCode::InvalidConfig),
            ExperimentError::CorruptRunFile { .. } => (StatusCode::INTERNAL_SERVER_ERROR, ErrorCode::CorruptRunFile),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, ErrorCode::Internal),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.http_status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}
