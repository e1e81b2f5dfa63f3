use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::{json, Value};
use tutorcast_core::help::HelpError;
use tutorcast_core::quiz::QuizError;
use tutorcast_core::replay::ReplayError;
use tutorcast_core::search::SearchError;
use tutorcast_exec::ExecError;
use tutorcast_recorder::RecorderError;
use tutorcast_store::StoreError;

/// Error body: `{"error": {"code", "message", "details"?}}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub details: Option<Value>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into(), details: None }
    }

    pub fn unauthenticated(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "unauthenticated", message)
    }

    pub fn forbidden(message: impl Into<String>) -> Self {
        Self::new(StatusCode::FORBIDDEN, "forbidden", message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn internal(message: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message.to_string())
    }

    fn with_details(mut self, details: Value) -> Self {
        self.details = Some(details);
        self
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            tracing::error!(code = self.code, message = %self.message, "request failed");
        }
        let mut body = json!({ "code": self.code, "message": self.message });
        if let Some(details) = self.details {
            body["details"] = details;
        }
        (self.status, Json(json!({ "error": body }))).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(err: StoreError) -> Self {
        match &err {
            StoreError::NotFound { .. } => ApiError::not_found(err.to_string()),
            StoreError::AlreadyExists { .. } => ApiError::new(StatusCode::CONFLICT, "already_exists", err.to_string()),
            StoreError::Conflict { .. } => ApiError::new(StatusCode::CONFLICT, "conflict", err.to_string()),
            StoreError::Integrity { .. } => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "integrity", err.to_string()),
            _ => ApiError::internal(err),
        }
    }
}

impl From<RecorderError> for ApiError {
    fn from(err: RecorderError) -> Self {
        let message = err.to_string();
        match err {
            RecorderError::Unauthorized(_) => ApiError::forbidden(message),
            RecorderError::NotFound { .. } => ApiError::not_found(message),
            RecorderError::Lifecycle(_) => ApiError::new(StatusCode::CONFLICT, "lifecycle", message),
            RecorderError::Input(_) => ApiError::bad_request(message),
            RecorderError::Ordering { expected, got } => {
                ApiError::new(StatusCode::CONFLICT, "ordering", message).with_details(json!({ "expected": expected, "got": got }))
            }
            RecorderError::Conflict(_) => ApiError::new(StatusCode::CONFLICT, "conflict", message),
            RecorderError::Invalid(report) => {
                let violations: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_section", message).with_details(json!({ "violations": violations }))
            }
            RecorderError::Store(store) => store.into(),
        }
    }
}

impl From<ExecError> for ApiError {
    fn from(err: ExecError) -> Self {
        match err {
            ExecError::UnknownLanguage(_) => ApiError::new(StatusCode::BAD_REQUEST, "unknown_language", err.to_string()),
            ExecError::SourceTooLarge(_) => ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, "source_too_large", err.to_string()),
            ExecError::InvalidLimits(_) => ApiError::bad_request(err.to_string()),
            ExecError::QueueTimeout(_) => ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "queue_timeout", err.to_string()),
            ExecError::Infrastructure(_) => ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "sandbox_unavailable", err.to_string()),
        }
    }
}

impl From<ReplayError> for ApiError {
    fn from(err: ReplayError) -> Self {
        match err {
            ReplayError::TimeOutOfRange { .. } => ApiError::bad_request(err.to_string()),
            other => ApiError::internal(other),
        }
    }
}

impl From<SearchError> for ApiError {
    fn from(err: SearchError) -> Self {
        ApiError::bad_request(err.to_string())
    }
}

impl From<HelpError> for ApiError {
    fn from(err: HelpError) -> Self {
        ApiError::bad_request(err.to_string())
    }
}

impl From<QuizError> for ApiError {
    fn from(err: QuizError) -> Self {
        ApiError::bad_request(err.to_string())
    }
}
