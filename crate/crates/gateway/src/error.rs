use std::fmt;

use chemvecrag_agent::{AgentError, RetrieveError};
use chemvecrag_core::embedding::EmbeddingError;
use chemvecrag_core::panel::PanelError;
use chemvecrag_core::store::StoreError;

use crate::config::ConfigError;

/// Error classes shared by the CLI exit codes and the HTTP status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad arguments or request shape.
    Usage,
    /// A named collection or record does not exist.
    NotFound,
    /// Well-formed request, unusable data.
    Data,
    /// Storage, provider or model trouble.
    Backend,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Usage => 2,
            ErrorClass::NotFound | ErrorClass::Data => 3,
            ErrorClass::Backend => 4,
        }
    }

    pub fn http_status(self) -> u16 {
        match self {
            ErrorClass::Usage => 400,
            ErrorClass::NotFound => 404,
            ErrorClass::Data => 422,
            ErrorClass::Backend => 503,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceError {
    pub class: ErrorClass,
    /// Stable machine-readable code, e.g. `unknown_collection`.
    pub code: &'static str,
    pub detail: String,
}

impl ServiceError {
    pub fn new(class: ErrorClass, code: &'static str, detail: impl Into<String>) -> Self {
        ServiceError {
            class,
            code,
            detail: detail.into(),
        }
    }

    pub fn usage(detail: impl Into<String>) -> Self {
        ServiceError::new(ErrorClass::Usage, "usage", detail)
    }

    pub fn data(code: &'static str, detail: impl Into<String>) -> Self {
        ServiceError::new(ErrorClass::Data, code, detail)
    }

    pub fn backend(code: &'static str, detail: impl Into<String>) -> Self {
        ServiceError::new(ErrorClass::Backend, code, detail)
    }
}

impl fmt::Display for ServiceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.detail)
    }
}

impl std::error::Error for ServiceError {}

impl From<StoreError> for ServiceError {
    fn from(e: StoreError) -> Self {
        let detail = e.to_string();
        match e {
            StoreError::UnknownCollection(_) => ServiceError::new(ErrorClass::NotFound, "unknown_collection", detail),
            StoreError::UnknownId { .. } => ServiceError::new(ErrorClass::NotFound, "unknown_id", detail),
            StoreError::DuplicateId(_) => ServiceError::data("duplicate_id", detail),
            StoreError::DimMismatch { .. } => ServiceError::data("dim_mismatch", detail),
            StoreError::InvalidRecord { .. } => ServiceError::data("invalid_record", detail),
            StoreError::BrokenLink { .. } => ServiceError::data("broken_link", detail),
            StoreError::InvalidK => ServiceError::usage(detail),
            StoreError::Filter(_) => ServiceError::new(ErrorClass::Usage, "bad_filter", detail),
            StoreError::NotTrained(_) => ServiceError::data("not_trained", detail),
            StoreError::DuplicateCollection(_) | StoreError::InvalidSchema(_) => {
                ServiceError::data("bad_schema", detail)
            }
            StoreError::CorruptSnapshot(_) | StoreError::VersionMismatch { .. } => {
                ServiceError::backend("corrupt_snapshot", detail)
            }
            StoreError::Io(_) => ServiceError::backend("io", detail),
        }
    }
}

impl From<EmbeddingError> for ServiceError {
    fn from(e: EmbeddingError) -> Self {
        let detail = e.to_string();
        match e {
            EmbeddingError::ProviderFailure(_) => ServiceError::backend("provider", detail),
            EmbeddingError::Structure(_) | EmbeddingError::Reaction(_) => ServiceError::data("bad_structure", detail),
            EmbeddingError::NoProvider(_) | EmbeddingError::ModalityMismatch { .. } => ServiceError::usage(detail),
            _ => ServiceError::data("bad_vector", detail),
        }
    }
}

impl From<PanelError> for ServiceError {
    fn from(e: PanelError) -> Self {
        ServiceError::data("panel", e.to_string())
    }
}

impl From<ConfigError> for ServiceError {
    fn from(e: ConfigError) -> Self {
        ServiceError::usage(e.to_string())
    }
}

impl From<AgentError> for ServiceError {
    fn from(e: AgentError) -> Self {
        let detail = e.to_string();
        match e {
            AgentError::EmptyQuestion | AgentError::InvalidConfig(_) => ServiceError::usage(detail),
            AgentError::NoQueryPayload(_) => ServiceError::data("no_query_payload", detail),
            AgentError::Retrieve(RetrieveError::Image(_)) => ServiceError::data("image", detail),
            AgentError::Retrieve(_) => ServiceError::backend("retrieval", detail),
        }
    }
}
