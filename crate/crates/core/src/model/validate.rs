use std::fmt;

use serde::{Deserialize, Serialize};

use super::{SectionRecording, Timestamp, SCHEMA_VERSION};
use crate::replay::{PlaybackState, ReplayError, ReplayRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    UnsupportedSchema,
    NonDenseSeq,
    OutOfOrder,
    BeyondDuration,
    PositionOutOfBounds,
    DeleteMismatch,
    HighlightOutOfBounds,
    ScrollOutOfRange,
    InvalidLayout,
    InvalidExecutionRef,
    FinalCodeMismatch,
    TranscriptOrder,
}

impl ViolationKind {
    pub fn label(self) -> &'static str {
        match self {
            ViolationKind::UnsupportedSchema => "unsupported schema",
            ViolationKind::NonDenseSeq => "non-dense seq",
            ViolationKind::OutOfOrder => "events out of order",
            ViolationKind::BeyondDuration => "timestamp beyond duration",
            ViolationKind::PositionOutOfBounds => "position out of bounds",
            ViolationKind::DeleteMismatch => "delete mismatch",
            ViolationKind::HighlightOutOfBounds => "highlight out of bounds",
            ViolationKind::ScrollOutOfRange => "scroll out of range",
            ViolationKind::InvalidLayout => "invalid layout",
            ViolationKind::InvalidExecutionRef => "invalid execution reference",
            ViolationKind::FinalCodeMismatch => "final code mismatch",
            ViolationKind::TranscriptOrder => "transcript cue order",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seq: Option<u64>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.label())?;
        if let Some(seq) = self.seq {
            write!(f, " at seq {seq}")?;
        }
        if !self.detail.is_empty() {
            write!(f, ": {}", self.detail)?;
        }
        Ok(())
    }
}

/// Violations found in a section; empty means valid.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }

    fn push(&mut self, kind: ViolationKind, seq: Option<u64>, detail: impl Into<String>) {
        self.violations.push(Violation { kind, seq, detail: detail.into() });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

fn rule_kind(rule: &ReplayRule) -> ViolationKind {
    match rule {
        ReplayRule::OutOfOrder { .. } => ViolationKind::OutOfOrder,
        ReplayRule::NonDenseSeq { .. } => ViolationKind::NonDenseSeq,
        ReplayRule::PositionOutOfBounds { .. } => ViolationKind::PositionOutOfBounds,
        ReplayRule::DeleteMismatch { .. } => ViolationKind::DeleteMismatch,
        ReplayRule::HighlightOutOfBounds { .. } => ViolationKind::HighlightOutOfBounds,
        ReplayRule::ScrollOutOfRange { .. } => ViolationKind::ScrollOutOfRange,
        ReplayRule::InvalidLayout(_) => ViolationKind::InvalidLayout,
        ReplayRule::ExecutionRefNotPrior { .. } => ViolationKind::InvalidExecutionRef,
    }
}

/// Checks every structural invariant, then trial-replays the log to catch
/// apply-time faults and confirm the final code.
pub fn validate_section(section: &SectionRecording) -> ValidationReport {
    let mut report = ValidationReport::default();
    if section.schema_version != SCHEMA_VERSION {
        report.push(ViolationKind::UnsupportedSchema, None, format!("version {}", section.schema_version));
    }

    let mut previous = Timestamp::ZERO;
    for (idx, event) in section.events.iter().enumerate() {
        if event.seq != idx as u64 {
            report.push(ViolationKind::NonDenseSeq, Some(event.seq), format!("expected {idx}"));
        }
        if event.at < previous {
            report.push(ViolationKind::OutOfOrder, Some(event.seq), format!("{} after {}", event.at, previous));
        }
        if event.at > section.duration {
            report.push(ViolationKind::BeyondDuration, Some(event.seq), format!("{} > {}", event.at, section.duration));
        }
        previous = previous.max(event.at);
    }

    let mut cue_end = Timestamp::ZERO;
    for (i, cue) in section.transcript.iter().enumerate() {
        if cue.start > cue.end || cue.start < cue_end {
            report.push(ViolationKind::TranscriptOrder, None, format!("cue {i} [{}, {}]", cue.start, cue.end));
        }
        if cue.end > section.duration {
            report.push(ViolationKind::BeyondDuration, None, format!("cue {i} ends at {}", cue.end));
        }
        cue_end = cue_end.max(cue.end);
    }

    let mut state = PlaybackState::initial(section);
    for event in &section.events {
        if let Err(err) = state.apply(event) {
            match err {
                ReplayError::Apply { seq, rule } => report.push(rule_kind(&rule), Some(seq), rule.to_string()),
                other => report.push(ViolationKind::InvalidLayout, Some(event.seq), other.to_string()),
            }
            return report;
        }
    }
    let code = state.code();
    if code != section.final_code {
        report.push(ViolationKind::FinalCodeMismatch, None, format!("replay yields {} chars, final_code has {}", code.chars().count(), section.final_code.chars().count()));
    }
    report
}
