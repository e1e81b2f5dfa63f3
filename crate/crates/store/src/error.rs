use thiserror::Error;
use tutorcast_core::model::CodecError;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{kind} {id} not found")]
    NotFound { kind: &'static str, id: String },
    #[error("{kind} {id} already exists")]
    AlreadyExists { kind: &'static str, id: String },
    #[error("version conflict on {kind} {id}: expected {expected}, found {found}")]
    Conflict { kind: &'static str, id: String, expected: u64, found: u64 },
    #[error("integrity error in bundle {bundle_id}, file {file}: {detail}")]
    Integrity { bundle_id: String, file: String, detail: String },
    #[error("path escapes the bundle directory: {0}")]
    Traversal(String),
    #[error("injected fault after {0} file writes")]
    InjectedFault(usize),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("metadata backend: {0}")]
    Backend(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl StoreError {
    pub fn not_found(kind: &'static str, id: impl ToString) -> Self {
        StoreError::NotFound { kind, id: id.to_string() }
    }
}

impl From<rusqlite::Error> for StoreError {
    fn from(err: rusqlite::Error) -> Self {
        StoreError::Backend(err.to_string())
    }
}

impl From<serde_json::Error> for StoreError {
    fn from(err: serde_json::Error) -> Self {
        StoreError::Backend(format!("stored row does not decode: {err}"))
    }
}
