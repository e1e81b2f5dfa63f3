//! Core of the tutorial recorder: the artifact model, deterministic replay,
//! timeline search, contextual help queries and quiz grading.
//!
//! Nothing here touches the network or the filesystem, so the crate also
//! builds for `wasm32-unknown-unknown`.

pub mod help;
pub mod model;
pub mod quiz;
pub mod replay;
pub mod script;
pub mod search;
#[cfg(feature = "testkit")]
pub mod testkit;

pub use model::{
    ActionEvent, Action, CodeEdit, Cue, EditKind, ExecutionMarker, Highlight, Pane, PaneId, PaneKind, PanelLayout, Position, QuizSection, Scroll,
    SectionId, SectionRecording, Timestamp, Tutorial, TutorialId, UserId,
};
pub use replay::{apply_event, build_snapshot_index, copy_code_at, state_at, PlaybackState, ReplayError, SnapshotIndex};
