use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    NotFound(String),
    /// The request is well formed but clashes with the session state.
    #[error("{0}")]
    Conflict(String),
    /// A label that is not a class of the session.
    #[error("{0}")]
    Unprocessable(String),
    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Conflict(_) => StatusCode::CONFLICT,
            ApiError::Unprocessable(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn from_core(e: alloom_core::Error) -> Self {
        use alloom_core::Error as E;
        match e {
            E::Oracle(_) | E::MismatchedStepGrid => ApiError::Internal(e.to_string()),
            other => ApiError::BadRequest(other.to_string()),
        }
    }

    pub fn from_harness(e: alloom_harness::HarnessError) -> Self {
        use alloom_harness::HarnessError as H;
        match e {
            H::Invalid(msg) => ApiError::BadRequest(msg),
            H::Core(c) => ApiError::from_core(c),
            H::Io { path, source } if source.kind() == std::io::ErrorKind::NotFound => {
                ApiError::NotFound(format!("{} not found", path.display()))
            }
            other => ApiError::Internal(other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = self.status();
        let body = json!({
            "api_version": crate::API_VERSION,
            "error": {
                "code": status.as_u16(),
                "message": self.to_string(),
            }
        });
        (status, Json(body)).into_response()
    }
}
