//! Authoring: recording sessions that stage the author's action events and
//! finalize them into stored sections, and the tutorial lifecycle around them.

mod lifecycle;
mod session;
mod transcribe;

use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use thiserror::Error;
use tutorcast_core::model::{Tutorial, TutorialId, UserId, ValidationReport};
use tutorcast_store::{Repository, Role, StoreError};

pub use session::{AppendAck, MAX_STAGED_EVENTS};
pub use transcribe::{StubTranscriber, TranscriptionProvider, STUB_CUE_MS, STUB_CUE_TEXT};

#[derive(Debug, Error)]
pub enum RecorderError {
    #[error("not allowed: {0}")]
    Unauthorized(String),
    #[error("{kind} {id} not found")]
    NotFound { kind: &'static str, id: String },
    #[error("lifecycle: {0}")]
    Lifecycle(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("out-of-order batch: expected seq {expected}, got {got}")]
    Ordering { expected: u64, got: u64 },
    #[error("concurrent modification of {0}; retry")]
    Conflict(String),
    #[error("section rejected: {0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    Store(StoreError),
}

impl From<StoreError> for RecorderError {
    fn from(err: StoreError) -> Self {
        match err {
            StoreError::NotFound { kind, id } => RecorderError::NotFound { kind, id },
            StoreError::Conflict { kind, id, .. } => RecorderError::Conflict(format!("{kind} {id}")),
            other => RecorderError::Store(other),
        }
    }
}

/// The authenticated caller of an authoring operation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Actor {
    pub user_id: UserId,
    pub role: Role,
}

impl Actor {
    pub fn author(id: &str) -> Self {
        Actor { user_id: UserId::new(id), role: Role::Author }
    }

    pub fn student(id: &str) -> Self {
        Actor { user_id: UserId::new(id), role: Role::Student }
    }
}

/// Source of wall-clock epoch milliseconds.
pub trait Clock: Send + Sync {
    fn now_ms(&self) -> u64;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
    }
}

/// Optimistic updates retry this many times before reporting a conflict.
const CAS_ATTEMPTS: usize = 16;

#[derive(Clone)]
pub struct Recorder {
    repo: Repository,
    transcriber: Arc<dyn TranscriptionProvider>,
    clock: Arc<dyn Clock>,
}

impl std::fmt::Debug for Recorder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Recorder").finish_non_exhaustive()
    }
}

impl Recorder {
    pub fn new(repo: Repository) -> Self {
        Recorder { repo, transcriber: Arc::new(StubTranscriber), clock: Arc::new(SystemClock) }
    }

    pub fn with_transcriber(mut self, transcriber: Arc<dyn TranscriptionProvider>) -> Self {
        self.transcriber = transcriber;
        self
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn repo(&self) -> &Repository {
        &self.repo
    }

    pub fn tutorial(&self, id: &TutorialId) -> Result<Tutorial, RecorderError> {
        Ok(self.repo.meta.tutorial(id)?.ok_or_else(|| StoreError::not_found("tutorial", id))?)
    }

    /// Loads a tutorial the actor may modify: actor is an author and owns it.
    fn owned(&self, actor: &Actor, id: &TutorialId) -> Result<Tutorial, RecorderError> {
        if actor.role != Role::Author {
            return Err(RecorderError::Unauthorized("authoring requires the author role".into()));
        }
        let tutorial = self.tutorial(id)?;
        if tutorial.owner != actor.user_id {
            return Err(RecorderError::Unauthorized(format!("{} does not own tutorial {id}", actor.user_id)));
        }
        Ok(tutorial)
    }

    fn owned_draft(&self, actor: &Actor, id: &TutorialId) -> Result<Tutorial, RecorderError> {
        let tutorial = self.owned(actor, id)?;
        if tutorial.is_released() {
            return Err(RecorderError::Lifecycle(format!("tutorial {id} is released and can no longer change")));
        }
        Ok(tutorial)
    }

    /// Re-reads and re-applies `change` until the versioned write lands.
    fn update_draft<T>(&self, actor: &Actor, id: &TutorialId, mut change: impl FnMut(&mut Tutorial) -> Result<T, RecorderError>) -> Result<(Tutorial, T), RecorderError> {
        for _ in 0..CAS_ATTEMPTS {
            let mut tutorial = self.owned_draft(actor, id)?;
            let out = change(&mut tutorial)?;
            match self.repo.meta.update_tutorial(&tutorial) {
                Ok(stored) => return Ok((stored, out)),
                Err(StoreError::Conflict { .. }) => continue,
                Err(err) => return Err(err.into()),
            }
        }
        Err(RecorderError::Conflict(format!("tutorial {id}")))
    }
}
