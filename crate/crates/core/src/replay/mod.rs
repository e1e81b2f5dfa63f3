//! Deterministic reconstruction of the playback screen at any timeline instant.
//!
//! Playback state is a left fold of [`PlaybackState::apply`] over the events
//! with `at <= t`, in `(at, seq)` order, starting from
//! [`PlaybackState::initial`]. An event whose timestamp equals the playhead is
//! included. A [`SnapshotIndex`] only changes where the fold starts, never its
//! result.

mod buffer;
mod snapshot;

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    Action, ActionEvent, CodeEdit, EditKind, ExecutionMarker, Highlight, PaneId, PaneKind, PanelLayout, Position, Scroll, SectionRecording, Timestamp,
    ValidationReport,
};

pub use buffer::{advance, Buffer};
pub use snapshot::{build_snapshot_index, Snapshot, SnapshotIndex, DEFAULT_SNAPSHOT_INTERVAL_MS, MIN_SNAPSHOT_INTERVAL_MS};

use buffer::EditFault;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: u32,
    pub end: u32,
}

/// Contents of the input and output panes after the most recent recorded run.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IoPanes {
    pub stdin: String,
    pub stdout: String,
    pub stderr: String,
    pub last_run_seq: Option<u64>,
}

/// Everything visible on the playback screen at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaybackState {
    pub playhead: Timestamp,
    pub buffers: BTreeMap<PaneId, Buffer>,
    pub highlights: BTreeMap<PaneId, Vec<Span>>,
    pub scrolls: BTreeMap<PaneId, f64>,
    pub layout: PanelLayout,
    pub io: IoPanes,
    /// Character length of the notes source; bounds highlights on notes panes.
    pub notes_chars: usize,
}

/// The precondition an event violated when applied.
#[derive(Debug, Clone, PartialEq)]
pub enum ReplayRule {
    OutOfOrder { previous: Timestamp },
    NonDenseSeq { expected: u64 },
    PositionOutOfBounds { pane: PaneId, position: Position },
    DeleteMismatch { pane: PaneId, expected: String, found: String },
    HighlightOutOfBounds { pane: PaneId, start: u32, end: u32, len: usize },
    ScrollOutOfRange { pane: PaneId, fraction: f64 },
    InvalidLayout(String),
    ExecutionRefNotPrior { code_snapshot_seq: u64 },
}

impl fmt::Display for ReplayRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReplayRule::OutOfOrder { previous } => write!(f, "events out of order (previous event at {previous})"),
            ReplayRule::NonDenseSeq { expected } => write!(f, "non-dense seq (expected {expected})"),
            ReplayRule::PositionOutOfBounds { pane, position } => {
                write!(f, "position out of bounds: {pane} ({}, {})", position.line, position.column)
            }
            ReplayRule::DeleteMismatch { pane, expected, found } => {
                write!(f, "delete mismatch in {pane}: expected {expected:?}, buffer has {found:?}")
            }
            ReplayRule::HighlightOutOfBounds { pane, start, end, len } => {
                write!(f, "highlight out of bounds: {pane} [{start}, {end}) over {len} chars")
            }
            ReplayRule::ScrollOutOfRange { pane, fraction } => write!(f, "scroll out of range: {pane} {fraction}"),
            ReplayRule::InvalidLayout(why) => write!(f, "invalid layout: {why}"),
            ReplayRule::ExecutionRefNotPrior { code_snapshot_seq } => {
                write!(f, "execution refers to seq {code_snapshot_seq}, which is not a prior event")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReplayError {
    #[error("event {seq}: {rule}")]
    Apply { seq: u64, rule: ReplayRule },
    #[error("timeline position {t} outside [0, {duration}]")]
    TimeOutOfRange { t: Timestamp, duration: Timestamp },
    #[error("snapshot index was built for a different section")]
    IndexMismatch,
    #[error("snapshot interval {0} ms is below the {MIN_SNAPSHOT_INTERVAL_MS} ms minimum")]
    IntervalTooShort(u64),
    #[error("section is invalid: {0}")]
    InvalidSection(ValidationReport),
}

impl PlaybackState {
    /// State before any event: default layout, empty buffers.
    pub fn initial(section: &SectionRecording) -> Self {
        PlaybackState {
            playhead: Timestamp::ZERO,
            buffers: BTreeMap::new(),
            highlights: BTreeMap::new(),
            scrolls: BTreeMap::new(),
            layout: PanelLayout::default_layout(),
            io: IoPanes::default(),
            notes_chars: section.notes_source.chars().count(),
        }
    }

    /// All code buffers concatenated in pane-id order.
    pub fn code(&self) -> String {
        self.buffers.values().map(|b| b.text.as_str()).collect()
    }

    /// Character length of the text a highlight on `pane` is anchored to.
    fn pane_text_len(&self, pane: &PaneId) -> usize {
        if let Some(buf) = self.buffers.get(pane) {
            return buf.text.chars().count();
        }
        match self.layout.pane(pane).map(|p| p.kind) {
            Some(PaneKind::Notes) => self.notes_chars,
            Some(PaneKind::Input) => self.io.stdin.chars().count(),
            Some(PaneKind::Output) => self.io.stdout.chars().count(),
            _ => 0,
        }
    }

    /// Text shown in `pane`, when the state carries it.
    pub fn pane_text(&self, pane: &PaneId) -> Option<Cow<'_, str>> {
        if let Some(buf) = self.buffers.get(pane) {
            return Some(Cow::Borrowed(&buf.text));
        }
        match self.layout.pane(pane)?.kind {
            PaneKind::Input => Some(Cow::Borrowed(&self.io.stdin)),
            PaneKind::Output => Some(Cow::Borrowed(&self.io.stdout)),
            _ => None,
        }
    }

    /// Applies one event in place. On error the state is left unchanged.
    pub fn apply(&mut self, event: &ActionEvent) -> Result<(), ReplayError> {
        let fail = |rule| ReplayError::Apply { seq: event.seq, rule };
        match &event.action {
            Action::Edit(edit) => self.apply_edit(edit).map_err(fail)?,
            Action::Highlight(h) => self.apply_highlight(h).map_err(fail)?,
            Action::Scroll(Scroll { pane_id, fraction }) => {
                if !(0.0..=1.0).contains(fraction) {
                    return Err(fail(ReplayRule::ScrollOutOfRange { pane: pane_id.clone(), fraction: *fraction }));
                }
                self.scrolls.insert(pane_id.clone(), *fraction);
            }
            Action::Layout(layout) => {
                layout.check().map_err(|why| fail(ReplayRule::InvalidLayout(why)))?;
                self.layout = layout.clone();
            }
            Action::Execution(marker) => self.apply_execution(event.seq, marker).map_err(fail)?,
        }
        self.playhead = self.playhead.max(event.at);
        Ok(())
    }

    fn apply_edit(&mut self, edit: &CodeEdit) -> Result<(), ReplayRule> {
        let perform = |buffer: &mut Buffer| match edit.kind {
            EditKind::Insert => buffer.insert(edit.position, &edit.text),
            EditKind::Delete => buffer.delete(edit.position, &edit.text),
        };
        let result = match self.buffers.get_mut(&edit.pane_id) {
            Some(buffer) => perform(buffer),
            None => {
                let mut fresh = Buffer::default();
                let result = perform(&mut fresh);
                if result.is_ok() {
                    self.buffers.insert(edit.pane_id.clone(), fresh);
                }
                result
            }
        };
        result.map_err(|fault| match fault {
            EditFault::OutOfBounds => ReplayRule::PositionOutOfBounds { pane: edit.pane_id.clone(), position: edit.position },
            EditFault::Mismatch { found } => ReplayRule::DeleteMismatch { pane: edit.pane_id.clone(), expected: edit.text.clone(), found },
        })?;
        // Highlights are anchored to the text they were made on.
        self.highlights.remove(&edit.pane_id);
        Ok(())
    }

    fn apply_highlight(&mut self, h: &Highlight) -> Result<(), ReplayRule> {
        let len = self.pane_text_len(&h.pane_id);
        if h.start > h.end || h.end as usize > len {
            return Err(ReplayRule::HighlightOutOfBounds { pane: h.pane_id.clone(), start: h.start, end: h.end, len });
        }
        let span = Span { start: h.start, end: h.end };
        let spans = self.highlights.entry(h.pane_id.clone()).or_default();
        if h.active {
            if !spans.contains(&span) {
                spans.push(span);
            }
        } else {
            spans.retain(|s| *s != span);
            if spans.is_empty() {
                self.highlights.remove(&h.pane_id);
            }
        }
        Ok(())
    }

    fn apply_execution(&mut self, seq: u64, marker: &ExecutionMarker) -> Result<(), ReplayRule> {
        if marker.code_snapshot_seq >= seq {
            return Err(ReplayRule::ExecutionRefNotPrior { code_snapshot_seq: marker.code_snapshot_seq });
        }
        self.io = IoPanes {
            stdin: marker.stdin.clone(),
            stdout: marker.stdout.clone(),
            stderr: marker.stderr.clone(),
            last_run_seq: Some(seq),
        };
        let io_panes: Vec<PaneId> = self
            .layout
            .panes
            .iter()
            .filter(|p| matches!(p.kind, PaneKind::Input | PaneKind::Output) && !self.buffers.contains_key(&p.pane_id))
            .map(|p| p.pane_id.clone())
            .collect();
        for pane in io_panes {
            self.highlights.remove(&pane);
        }
        Ok(())
    }
}

/// Pure successor state; `state` is not modified.
pub fn apply_event(state: &PlaybackState, event: &ActionEvent) -> Result<PlaybackState, ReplayError> {
    let mut next = state.clone();
    next.apply(event)?;
    Ok(next)
}

/// Applies `events[from..]` with `at <= t` onto `state`, checking ordering as it goes.
pub(crate) fn fold_until(state: &mut PlaybackState, events: &[ActionEvent], from: usize, t: Timestamp) -> Result<usize, ReplayError> {
    let mut previous = if from == 0 { Timestamp::ZERO } else { events[from - 1].at };
    for (idx, event) in events.iter().enumerate().skip(from) {
        if event.at > t {
            return Ok(idx);
        }
        if event.seq != idx as u64 {
            return Err(ReplayError::Apply { seq: event.seq, rule: ReplayRule::NonDenseSeq { expected: idx as u64 } });
        }
        if event.at < previous {
            return Err(ReplayError::Apply { seq: event.seq, rule: ReplayRule::OutOfOrder { previous } });
        }
        previous = event.at;
        state.apply(event)?;
    }
    Ok(events.len())
}

/// Playback state at `t`. With an index, the fold starts from the latest
/// snapshot at or before `t`.
pub fn state_at(section: &SectionRecording, t: Timestamp, index: Option<&SnapshotIndex>) -> Result<PlaybackState, ReplayError> {
    if t > section.duration {
        return Err(ReplayError::TimeOutOfRange { t, duration: section.duration });
    }
    let (mut state, from) = match index {
        Some(index) => {
            if !index.matches(section) {
                return Err(ReplayError::IndexMismatch);
            }
            match index.latest_at_or_before(t) {
                Some(snap) => (snap.state.clone(), snap.next_event),
                None => (PlaybackState::initial(section), 0),
            }
        }
        None => (PlaybackState::initial(section), 0),
    };
    fold_until(&mut state, &section.events, from, t)?;
    state.playhead = t;
    Ok(state)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeCopy {
    pub language: String,
    pub text: String,
}

/// The author's code as it stood at `t`, ready for the practice panel.
pub fn copy_code_at(section: &SectionRecording, t: Timestamp, index: Option<&SnapshotIndex>) -> Result<CodeCopy, ReplayError> {
    let state = state_at(section, t, index)?;
    Ok(CodeCopy { language: section.language.clone(), text: state.code() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Pane, CODE_PANE, NOTES_PANE};

    fn ev(seq: u64, at: u64, action: impl Into<Action>) -> ActionEvent {
        ActionEvent::new(seq, Timestamp(at), action)
    }

    fn blank() -> PlaybackState {
        PlaybackState::initial(&SectionRecording::empty("s", "python", Timestamp(0)))
    }

    #[test]
    fn insert_into_empty_buffer() {
        let s = apply_event(&blank(), &ev(0, 0, CodeEdit::insert(CODE_PANE, Position::new(0, 0), "a"))).unwrap();
        assert_eq!(s.code(), "a");
    }

    #[test]
    fn delete_tail_character() {
        let s = apply_event(&blank(), &ev(0, 0, CodeEdit::insert(CODE_PANE, Position::new(0, 0), "ab"))).unwrap();
        let s = apply_event(&s, &ev(1, 0, CodeEdit::delete(CODE_PANE, Position::new(0, 1), "b"))).unwrap();
        assert_eq!(s.code(), "a");
    }

    #[test]
    fn apply_is_pure_and_atomic() {
        let start = apply_event(&blank(), &ev(0, 0, CodeEdit::insert(CODE_PANE, Position::new(0, 0), "ab"))).unwrap();
        let before = start.clone();
        let err = apply_event(&start, &ev(1, 5, CodeEdit::delete(CODE_PANE, Position::new(0, 0), "x"))).unwrap_err();
        assert!(matches!(err, ReplayError::Apply { seq: 1, rule: ReplayRule::DeleteMismatch { .. } }));
        assert_eq!(start, before);

        let mut inplace = start.clone();
        assert!(inplace.apply(&ev(1, 5, CodeEdit::insert("other", Position::new(0, 3), "x"))).is_err());
        assert_eq!(inplace, before);
    }

    #[test]
    fn highlight_bounds_follow_pane_kind() {
        let mut section = SectionRecording::empty("s", "python", Timestamp(0));
        section.notes_source = "four".into();
        let s = PlaybackState::initial(&section);
        assert!(apply_event(&s, &ev(0, 0, Highlight { pane_id: NOTES_PANE.into(), start: 0, end: 4, active: true })).is_ok());
        let err = apply_event(&s, &ev(0, 0, Highlight { pane_id: NOTES_PANE.into(), start: 0, end: 5, active: true })).unwrap_err();
        assert!(err.to_string().contains("highlight out of bounds"), "{err}");
    }

    #[test]
    fn edit_clears_highlights_on_its_pane() {
        let mut s = blank();
        s.apply(&ev(0, 0, CodeEdit::insert(CODE_PANE, Position::new(0, 0), "abc"))).unwrap();
        s.apply(&ev(1, 1, Highlight { pane_id: CODE_PANE.into(), start: 0, end: 2, active: true })).unwrap();
        assert_eq!(s.highlights[&PaneId::from(CODE_PANE)], vec![Span { start: 0, end: 2 }]);
        s.apply(&ev(2, 2, CodeEdit::insert(CODE_PANE, Position::new(0, 3), "d"))).unwrap();
        assert!(s.highlights.is_empty());
    }

    #[test]
    fn highlight_toggle_off() {
        let mut section = SectionRecording::empty("s", "python", Timestamp(0));
        section.notes_source = "some notes".into();
        let mut s = PlaybackState::initial(&section);
        s.apply(&ev(0, 0, Highlight { pane_id: NOTES_PANE.into(), start: 0, end: 4, active: true })).unwrap();
        s.apply(&ev(1, 0, Highlight { pane_id: NOTES_PANE.into(), start: 0, end: 4, active: false })).unwrap();
        assert!(s.highlights.is_empty());
    }

    #[test]
    fn execution_marker_fills_io_panes() {
        let mut s = blank();
        s.apply(&ev(0, 0, CodeEdit::insert(CODE_PANE, Position::new(0, 0), "print(input())"))).unwrap();
        s.apply(&ev(1, 10, ExecutionMarker { code_snapshot_seq: 0, stdin: "7\n".into(), stdout: "7\n".into(), stderr: String::new() }))
            .unwrap();
        assert_eq!(s.io.stdout, "7\n");
        assert_eq!(s.io.last_run_seq, Some(1));
        let bad = ExecutionMarker { code_snapshot_seq: 5, stdin: String::new(), stdout: String::new(), stderr: String::new() };
        assert!(s.apply(&ev(2, 10, bad)).is_err());
    }

    #[test]
    fn layout_and_scroll_validation() {
        let mut s = blank();
        let mut layout = PanelLayout::default_layout();
        layout.panes[0].maximized = true;
        s.apply(&ev(0, 0, layout.clone())).unwrap();
        assert_eq!(s.layout, layout);
        layout.panes[1].maximized = true;
        assert!(s.apply(&ev(1, 0, layout)).is_err());
        let dup = PanelLayout { panes: vec![Pane::new("a", PaneKind::Code, 0.0, 0.0, 1.0, 1.0); 2] };
        assert!(s.apply(&ev(1, 0, dup)).is_err());
        assert!(s.apply(&ev(1, 0, Scroll { pane_id: CODE_PANE.into(), fraction: 1.5 })).is_err());
        assert!(s.apply(&ev(1, 0, Scroll { pane_id: CODE_PANE.into(), fraction: f64::NAN })).is_err());
        s.apply(&ev(1, 0, Scroll { pane_id: CODE_PANE.into(), fraction: 0.25 })).unwrap();
        assert_eq!(s.scrolls[&PaneId::from(CODE_PANE)], 0.25);
    }

    fn typed_section() -> SectionRecording {
        let mut section = SectionRecording::empty("s", "python", Timestamp(10_000));
        for (i, ch) in "hello".chars().enumerate() {
            section.events.push(ev(i as u64, 1000 * (i as u64 + 1), CodeEdit::insert(CODE_PANE, Position::new(0, i as u32), ch.to_string())));
        }
        section.final_code = "hello".into();
        section
    }

    #[test]
    fn boundary_includes_event_at_t() {
        let section = typed_section();
        assert_eq!(state_at(&section, Timestamp(0), None).unwrap().code(), "");
        assert_eq!(state_at(&section, Timestamp(999), None).unwrap().code(), "");
        assert_eq!(state_at(&section, Timestamp(1000), None).unwrap().code(), "h");
        assert_eq!(state_at(&section, Timestamp(3500), None).unwrap().code(), "hel");
        assert_eq!(state_at(&section, Timestamp(10_000), None).unwrap().code(), "hello");
    }

    #[test]
    fn initial_state_at_zero_uses_default_layout() {
        let section = typed_section();
        let s = state_at(&section, Timestamp(0), None).unwrap();
        assert_eq!(s.layout, PanelLayout::default_layout());
        assert_eq!(s, PlaybackState::initial(&section));
    }

    #[test]
    fn layout_event_at_zero_is_visible_at_zero() {
        let mut section = SectionRecording::empty("s", "python", Timestamp(1000));
        let layout = PanelLayout { panes: vec![Pane::new(CODE_PANE, PaneKind::Code, 0.0, 0.0, 1.0, 1.0)] };
        section.events.push(ev(0, 0, layout.clone()));
        assert_eq!(state_at(&section, Timestamp(0), None).unwrap().layout, layout);
    }

    #[test]
    fn out_of_range_time() {
        let section = typed_section();
        assert_eq!(
            state_at(&section, Timestamp(10_001), None),
            Err(ReplayError::TimeOutOfRange { t: Timestamp(10_001), duration: Timestamp(10_000) })
        );
        assert!(copy_code_at(&section, Timestamp(10_001), None).is_err());
    }

    #[test]
    fn copy_code_prefix() {
        let section = typed_section();
        let copy = copy_code_at(&section, Timestamp(2000), None).unwrap();
        assert_eq!(copy, CodeCopy { language: "python".into(), text: "he".into() });
        assert_eq!(copy_code_at(&section, section.duration, None).unwrap().text, section.final_code);
        assert_eq!(copy_code_at(&section, Timestamp(0), None).unwrap().text, "");
    }

    #[test]
    fn disorder_is_a_hard_failure() {
        let mut section = typed_section();
        section.events[3].at = Timestamp(500);
        assert!(matches!(
            state_at(&section, section.duration, None),
            Err(ReplayError::Apply { seq: 3, rule: ReplayRule::OutOfOrder { .. } })
        ));
        let mut section = typed_section();
        section.events[2].seq = 7;
        assert!(matches!(
            state_at(&section, section.duration, None),
            Err(ReplayError::Apply { rule: ReplayRule::NonDenseSeq { expected: 2 }, .. })
        ));
    }
}
