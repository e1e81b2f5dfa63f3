//! Recording artifacts: timestamped author actions, coding and quiz sections,
//! tutorials, and their canonical encodings.

mod bundle;
mod codec;
mod session;
mod validate;
mod wire;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use bundle::{parse_coding_bundle, parse_quiz_bundle, render_coding_bundle, render_quiz_bundle, BundleFile, BundleManifest, SectionKind, BUNDLE_AUDIO, BUNDLE_ACTIONS, BUNDLE_CODE, BUNDLE_MANIFEST, BUNDLE_NOTES, BUNDLE_QUIZ, BUNDLE_TRANSCRIPT};
pub use codec::{deserialize_section, render_vtt, serialize_section, CodecError};
pub use session::{RecordingSession, SessionState};
pub use validate::{validate_section, ValidationReport, Violation, ViolationKind};

/// Current artifact schema. Documents carrying any other value are rejected.
pub const SCHEMA_VERSION: u32 = 1;

/// Milliseconds since section start. The audio track defines t = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(pub u64);

impl Timestamp {
    pub const ZERO: Timestamp = Timestamp(0);

    pub const fn from_millis(ms: u64) -> Self {
        Timestamp(ms)
    }

    pub const fn as_millis(self) -> u64 {
        self.0
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ms", self.0)
    }
}

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                $name(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_owned())
            }
        }
    };
}

string_id!(
    /// Identifies a panel on the tutorial screen.
    PaneId
);
string_id!(SectionId);
string_id!(TutorialId);
string_id!(UserId);
string_id!(SessionId);

/// Zero-based line and column (in Unicode scalar values) inside a pane buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Position {
    pub line: u32,
    pub column: u32,
}

impl Position {
    pub const fn new(line: u32, column: u32) -> Self {
        Position { line, column }
    }
}

/// One timestamped author action.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionEvent {
    pub seq: u64,
    pub at: Timestamp,
    pub action: Action,
}

impl ActionEvent {
    pub fn new(seq: u64, at: Timestamp, action: impl Into<Action>) -> Self {
        ActionEvent { seq, at, action: action.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Edit(CodeEdit),
    Highlight(Highlight),
    Scroll(Scroll),
    Layout(PanelLayout),
    Execution(ExecutionMarker),
}

impl From<CodeEdit> for Action {
    fn from(v: CodeEdit) -> Self {
        Action::Edit(v)
    }
}
impl From<Highlight> for Action {
    fn from(v: Highlight) -> Self {
        Action::Highlight(v)
    }
}
impl From<Scroll> for Action {
    fn from(v: Scroll) -> Self {
        Action::Scroll(v)
    }
}
impl From<PanelLayout> for Action {
    fn from(v: PanelLayout) -> Self {
        Action::Layout(v)
    }
}
impl From<ExecutionMarker> for Action {
    fn from(v: ExecutionMarker) -> Self {
        Action::Execution(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditKind {
    Insert,
    Delete,
}

/// A positional insert or delete; one physical keystroke maps to one edit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeEdit {
    pub pane_id: PaneId,
    pub kind: EditKind,
    pub position: Position,
    /// Inserted text, or for deletes the exact text being removed.
    pub text: String,
}

impl CodeEdit {
    pub fn insert(pane: impl Into<String>, position: Position, text: impl Into<String>) -> Self {
        CodeEdit { pane_id: PaneId(pane.into()), kind: EditKind::Insert, position, text: text.into() }
    }

    pub fn delete(pane: impl Into<String>, position: Position, text: impl Into<String>) -> Self {
        CodeEdit { pane_id: PaneId(pane.into()), kind: EditKind::Delete, position, text: text.into() }
    }
}

/// Turns a highlight over `[start, end)` (character offsets into the pane's
/// current text) on or off.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Highlight {
    pub pane_id: PaneId,
    pub start: u32,
    pub end: u32,
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scroll {
    pub pane_id: PaneId,
    /// Proportional scroll position in `[0, 1]`.
    pub fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PaneKind {
    Notes,
    Code,
    Input,
    Output,
    Practice,
}

/// Placement of one panel. Geometry is in layout units, each within `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pane {
    pub pane_id: PaneId,
    pub kind: PaneKind,
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
    pub visible: bool,
    pub maximized: bool,
}

impl Pane {
    pub fn new(id: &str, kind: PaneKind, x: f64, y: f64, width: f64, height: f64) -> Self {
        Pane { pane_id: PaneId::new(id), kind, x, y, width, height, visible: true, maximized: false }
    }
}

/// Full snapshot of the panel arrangement.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PanelLayout {
    pub panes: Vec<Pane>,
}

pub const NOTES_PANE: &str = "notes";
pub const CODE_PANE: &str = "code";
pub const INPUT_PANE: &str = "input";
pub const OUTPUT_PANE: &str = "output";

impl PanelLayout {
    /// Notes on the left half, code top-right, input and output bottom-right.
    pub fn default_layout() -> Self {
        PanelLayout {
            panes: vec![
                Pane::new(NOTES_PANE, PaneKind::Notes, 0.0, 0.0, 0.5, 1.0),
                Pane::new(CODE_PANE, PaneKind::Code, 0.5, 0.0, 0.5, 0.6),
                Pane::new(INPUT_PANE, PaneKind::Input, 0.5, 0.6, 0.25, 0.4),
                Pane::new(OUTPUT_PANE, PaneKind::Output, 0.75, 0.6, 0.25, 0.4),
            ],
        }
    }

    pub fn pane(&self, id: &PaneId) -> Option<&Pane> {
        self.panes.iter().find(|p| &p.pane_id == id)
    }

    /// Describes the first structural problem, if any.
    pub fn check(&self) -> Result<(), String> {
        let mut seen = std::collections::BTreeSet::new();
        let mut maximized = 0;
        for pane in &self.panes {
            if !seen.insert(&pane.pane_id) {
                return Err(format!("duplicate pane id {}", pane.pane_id));
            }
            if pane.maximized {
                maximized += 1;
            }
            for (name, v) in [("x", pane.x), ("y", pane.y), ("width", pane.width), ("height", pane.height)] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(format!("pane {} {name} {v} outside [0,1]", pane.pane_id));
                }
            }
        }
        if maximized > 1 {
            return Err(format!("{maximized} maximized panes"));
        }
        Ok(())
    }
}

/// Marks a program run during recording. The recorded streams are replayed
/// as-is; playback never re-executes code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionMarker {
    /// Sequence number of the last event applied before the run.
    pub code_snapshot_seq: u64,
    pub stdin: String,
    pub stdout: String,
    pub stderr: String,
}

/// One subtitle cue over `[start, end]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cue {
    pub start: Timestamp,
    pub end: Timestamp,
    pub text: String,
}

/// A complete coding section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionRecording {
    pub schema_version: u32,
    pub section_id: SectionId,
    pub language: String,
    pub duration: Timestamp,
    /// Artifact reference for the audio track, relative to the bundle.
    pub audio_ref: String,
    pub notes_source: String,
    pub final_code: String,
    pub transcript: Vec<Cue>,
    pub events: Vec<ActionEvent>,
}

impl SectionRecording {
    /// An empty section with the current schema and the default audio reference.
    pub fn empty(section_id: impl Into<String>, language: impl Into<String>, duration: Timestamp) -> Self {
        SectionRecording {
            schema_version: SCHEMA_VERSION,
            section_id: SectionId(section_id.into()),
            language: language.into(),
            duration,
            audio_ref: BUNDLE_AUDIO.to_owned(),
            notes_source: String::new(),
            final_code: String::new(),
            transcript: Vec::new(),
            events: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub prompt: String,
    pub choices: Vec<String>,
    pub correct_index: usize,
    pub explanation: String,
    pub points: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuizSection {
    pub section_id: SectionId,
    pub questions: Vec<Question>,
}

impl QuizSection {
    pub fn check(&self) -> Result<(), String> {
        for (i, q) in self.questions.iter().enumerate() {
            if q.correct_index >= q.choices.len() {
                return Err(format!("question {i}: correct_index {} outside {} choices", q.correct_index, q.choices.len()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TutorialStatus {
    Draft,
    Released,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SectionRef {
    pub id: SectionId,
    pub kind: SectionKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tutorial {
    pub tutorial_id: TutorialId,
    pub title: String,
    pub language: String,
    pub owner: UserId,
    pub sections: Vec<SectionRef>,
    pub status: TutorialStatus,
    /// Optimistic-concurrency counter, bumped on every stored mutation.
    #[serde(default)]
    pub version: u64,
    /// Wall-clock release time in epoch milliseconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub released_at: Option<u64>,
}

impl Tutorial {
    pub fn new(tutorial_id: TutorialId, title: impl Into<String>, language: impl Into<String>, owner: UserId) -> Self {
        Tutorial {
            tutorial_id,
            title: title.into(),
            language: language.into(),
            owner,
            sections: Vec::new(),
            status: TutorialStatus::Draft,
            version: 0,
            released_at: None,
        }
    }

    pub fn is_released(&self) -> bool {
        self.status == TutorialStatus::Released
    }

    pub fn section_index(&self, id: &SectionId) -> Option<usize> {
        self.sections.iter().position(|s| &s.id == id)
    }
}
