use serde::{Deserialize, Serialize};

use super::{fold_until, PlaybackState, ReplayError};
use crate::model::{validate_section, SectionId, SectionRecording, Timestamp};

pub const DEFAULT_SNAPSHOT_INTERVAL_MS: u64 = 5_000;
pub const MIN_SNAPSHOT_INTERVAL_MS: u64 = 1_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub at: Timestamp,
    pub state: PlaybackState,
    /// Index of the first event not yet folded into `state`.
    pub next_event: usize,
}

/// Precomputed states at `0, interval, 2*interval, ...` up to the duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotIndex {
    pub section_id: SectionId,
    pub event_count: usize,
    pub interval_ms: u64,
    pub snapshots: Vec<Snapshot>,
}

impl SnapshotIndex {
    pub(crate) fn matches(&self, section: &SectionRecording) -> bool {
        self.section_id == section.section_id && self.event_count == section.events.len()
    }

    pub fn latest_at_or_before(&self, t: Timestamp) -> Option<&Snapshot> {
        let idx = self.snapshots.partition_point(|s| s.at <= t);
        idx.checked_sub(1).map(|i| &self.snapshots[i])
    }
}

pub fn build_snapshot_index(section: &SectionRecording, interval_ms: u64) -> Result<SnapshotIndex, ReplayError> {
    if interval_ms < MIN_SNAPSHOT_INTERVAL_MS {
        return Err(ReplayError::IntervalTooShort(interval_ms));
    }
    let report = validate_section(section);
    if !report.is_valid() {
        return Err(ReplayError::InvalidSection(report));
    }
    let mut state = PlaybackState::initial(section);
    let mut next_event = 0;
    let mut snapshots = Vec::with_capacity((section.duration.0 / interval_ms) as usize + 1);
    let mut at = 0;
    while at <= section.duration.0 {
        next_event = fold_until(&mut state, &section.events, next_event, Timestamp(at))?;
        state.playhead = Timestamp(at);
        snapshots.push(Snapshot { at: Timestamp(at), state: state.clone(), next_event });
        at += interval_ms;
    }
    Ok(SnapshotIndex { section_id: section.section_id.clone(), event_count: section.events.len(), interval_ms, snapshots })
}
