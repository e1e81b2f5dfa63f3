use serde::{Deserialize, Serialize};

use super::{ActionEvent, SectionId, SessionId, TutorialId, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Open,
    Finalized,
    Discarded,
}

/// An authoring session in progress: events staged by the recording UI,
/// waiting to be finalized into a section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingSession {
    pub session_id: SessionId,
    pub tutorial_id: TutorialId,
    pub author: UserId,
    /// Index in the tutorial's section list the finished section goes to.
    pub section_slot: usize,
    pub language: String,
    /// Epoch milliseconds.
    pub started_at: u64,
    pub staged_events: Vec<ActionEvent>,
    pub staged_notes: String,
    pub state: SessionState,
    #[serde(default)]
    pub version: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub section_id: Option<SectionId>,
}

impl RecordingSession {
    /// The seq the next staged event must carry.
    pub fn next_seq(&self) -> u64 {
        self.staged_events.len() as u64
    }
}
