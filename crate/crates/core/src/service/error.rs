use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;

use crate::factcheck::FactCheckError;
use crate::platform::PlatformError;
use crate::txflow::PdcError;

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub details: Option<serde_json::Value>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into(), details: None }
    }

    pub fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn unauthorized(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "UNAUTHENTICATED", message)
    }

    pub fn forbidden(message: impl Into<String>) -> Self {
        Self::new(StatusCode::FORBIDDEN, "FORBIDDEN", message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "NOT_FOUND", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", message)
    }
}

impl From<FactCheckError> for ApiError {
    fn from(e: FactCheckError) -> Self {
        use FactCheckError::*;
        let status = match &e {
            EmptyContent | UnknownVerdict(_) | EmptyVotes | InvalidArgument(_) => StatusCode::BAD_REQUEST,
            DuplicateNews { .. }
            | AlreadyVoted(_)
            | NewsAlreadyLabeled
            | QuorumNotReached { .. }
            | RevealMismatch(_)
            | CheckerExists(_) => StatusCode::CONFLICT,
            NotFound(_) | UnknownChecker(_) => StatusCode::NOT_FOUND,
            InactiveChecker(_) | NotAuthorized(_) | Private(PdcError::NotAMember { .. }) => StatusCode::FORBIDDEN,
            Private(PdcError::UnknownCollection(_)) | CorruptState(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let details = match &e {
            DuplicateNews { news_id } => Some(json!({ "news_id": news_id })),
            _ => None,
        };
        ApiError { status, code: e.code(), message: e.to_string(), details }
    }
}

impl From<PlatformError> for ApiError {
    fn from(e: PlatformError) -> Self {
        match e {
            PlatformError::Domain(d) => d.into(),
            PlatformError::Invalidated { tx_id, reason } => ApiError {
                status: StatusCode::CONFLICT,
                code: reason.code(),
                message: format!("transaction {tx_id} was invalidated at commit"),
                details: Some(json!({ "tx_id": tx_id })),
            },
            PlatformError::UnknownOperation(op) => {
                ApiError::bad_request("UNKNOWN_OPERATION", format!("unknown operation `{op}`"))
            }
            PlatformError::Endorsement(m) => ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "ENDORSEMENT_FAILED", m),
            PlatformError::Stopped => {
                ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "UNAVAILABLE", "the orderer is not running")
            }
            other => ApiError::internal(other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut error = json!({ "code": self.code, "message": self.message });
        if let Some(d) = self.details {
            error["details"] = d;
        }
        (self.status, Json(json!({ "error": error }))).into_response()
    }
}
