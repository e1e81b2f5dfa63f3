//! Compile-and-run of practice code in an isolated process per run, with
//! per-language plugins and hard limits on time, memory and output.

mod executor;
mod plugin;
mod sandbox;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use executor::{ExecConfig, Executor, NetworkPolicy};
pub use plugin::{LanguagePlugin, PluginError, Registry};

/// Largest accepted source file.
pub const MAX_SOURCE_BYTES: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    pub time_ms: u64,
    pub memory_bytes: u64,
    /// Cap applied to stdout and to stderr separately.
    pub output_bytes: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { time_ms: 10_000, memory_bytes: 256 << 20, output_bytes: 64 << 10 }
    }
}

impl Limits {
    /// Lowers each field to at most `max`.
    pub fn capped_by(self, max: Limits) -> Limits {
        Limits { time_ms: self.time_ms.min(max.time_ms), memory_bytes: self.memory_bytes.min(max.memory_bytes), output_bytes: self.output_bytes.min(max.output_bytes) }
    }

    fn check(&self) -> Result<(), ExecError> {
        if self.time_ms == 0 || self.output_bytes == 0 || self.memory_bytes < (16 << 20) {
            return Err(ExecError::InvalidLimits(format!("{self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitStatus {
    Code(i32),
    Signal(i32),
}

impl ExitStatus {
    pub fn success(&self) -> bool {
        *self == ExitStatus::Code(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub stdout: String,
    pub stderr: String,
    pub exit_status: ExitStatus,
    pub wall_time_ms: u64,
    pub timed_out: bool,
    /// Set when stdout or stderr hit the output cap; the run was stopped.
    pub output_truncated: bool,
    /// Compiler diagnostics when the compile step failed; nothing was run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compile_errors: Option<String>,
}

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("language {0:?} is not registered")]
    UnknownLanguage(String),
    #[error("source is {0} bytes; the limit is {MAX_SOURCE_BYTES}")]
    SourceTooLarge(usize),
    #[error("invalid limits: {0}")]
    InvalidLimits(String),
    #[error("no execution slot freed up within {0} ms")]
    QueueTimeout(u64),
    /// The sandbox itself failed; not the user's program.
    #[error("sandbox failure: {0}")]
    Infrastructure(String),
}

impl ExecError {
    /// True for errors caused by the request rather than the host.
    pub fn is_input_error(&self) -> bool {
        matches!(self, ExecError::UnknownLanguage(_) | ExecError::SourceTooLarge(_) | ExecError::InvalidLimits(_))
    }
}
