use axum::extract::rejection::JsonRejection;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use faircompass_core::compass::{CompassError, TreeError};
use faircompass_core::report::ReportError;
use serde::{Deserialize, Serialize};

/// Body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valid_choices: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub violations: Option<Vec<String>>,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                code: code.to_string(),
                message: message.into(),
                valid_choices: None,
                violations: None,
            },
        }
    }

    pub fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("unknown {what} {id}"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid_body", e.body_text())
    }
}

impl From<CompassError> for ApiError {
    fn from(e: CompassError) -> Self {
        let message = e.to_string();
        match e {
            CompassError::UnknownChoice { valid, .. } => {
                let mut err = Self::new(StatusCode::BAD_REQUEST, "unknown_choice", message);
                err.body.valid_choices = Some(valid);
                err
            }
            CompassError::SessionComplete { .. } => {
                Self::new(StatusCode::CONFLICT, "session_complete", message)
            }
            CompassError::NotAtDefinition { .. } => {
                Self::new(StatusCode::CONFLICT, "not_at_definition", message)
            }
            CompassError::NothingToUndo => Self::new(StatusCode::CONFLICT, "nothing_to_undo", message),
            CompassError::VersionMismatch { .. } => {
                Self::new(StatusCode::CONFLICT, "version_mismatch", message)
            }
            CompassError::InvalidTrail { .. } => {
                Self::new(StatusCode::BAD_REQUEST, "invalid_trail", message)
            }
        }
    }
}

impl From<TreeError> for ApiError {
    fn from(e: TreeError) -> Self {
        let mut err = Self::new(StatusCode::BAD_REQUEST, "invalid_tree", e.to_string());
        if let TreeError::Invalid(v) = e {
            err.body.violations = Some(v.iter().map(ToString::to_string).collect());
        }
        err
    }
}

impl From<ReportError> for ApiError {
    fn from(e: ReportError) -> Self {
        let code = match e {
            ReportError::Ingest(_) => "invalid_dataset",
            ReportError::Audit(_) => "audit_failed",
            ReportError::Definition(_) | ReportError::NoDefinitions => "invalid_definitions",
        };
        Self::new(StatusCode::BAD_REQUEST, code, e.to_string())
    }
}
