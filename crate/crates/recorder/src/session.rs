use serde::{Deserialize, Serialize};
use tutorcast_core::model::{
    validate_section, ActionEvent, RecordingSession, SectionKind, SectionRecording, SectionRef, SessionId, SessionState, Timestamp, TutorialId, SCHEMA_VERSION,
    BUNDLE_AUDIO,
};
use tutorcast_core::replay::PlaybackState;
use tutorcast_store::StoreError;

use crate::lifecycle::{check_slot, new_section_id};
use crate::{Actor, Recorder, RecorderError, CAS_ATTEMPTS};

/// Upper bound on events staged in one session.
pub const MAX_STAGED_EVENTS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppendAck {
    /// Highest seq staged so far; `None` while the session is empty.
    pub accepted_through_seq: Option<u64>,
}

impl Recorder {
    pub fn begin_session(&self, actor: &Actor, tutorial_id: &TutorialId, section_slot: usize, language: &str, notes_source: &str) -> Result<RecordingSession, RecorderError> {
        let tutorial = self.owned_draft(actor, tutorial_id)?;
        check_slot(section_slot, tutorial.sections.len())?;
        let session = RecordingSession {
            session_id: SessionId(format!("ses_{}", uuid::Uuid::new_v4().simple())),
            tutorial_id: tutorial_id.clone(),
            author: actor.user_id.clone(),
            section_slot,
            language: if language.is_empty() { tutorial.language.clone() } else { language.to_owned() },
            started_at: self.clock.now_ms(),
            staged_events: Vec::new(),
            staged_notes: notes_source.to_owned(),
            state: SessionState::Open,
            version: 0,
            section_id: None,
        };
        Ok(self.repo.meta.insert_session(&session)?)
    }

    pub fn session(&self, actor: &Actor, id: &SessionId) -> Result<RecordingSession, RecorderError> {
        let session = self.repo.meta.session(id)?.ok_or_else(|| StoreError::not_found("session", id))?;
        if session.author != actor.user_id {
            return Err(RecorderError::Unauthorized(format!("session {id} belongs to another author")));
        }
        Ok(session)
    }

    fn open_session(&self, actor: &Actor, id: &SessionId) -> Result<RecordingSession, RecorderError> {
        let session = self.session(actor, id)?;
        if session.state != SessionState::Open {
            return Err(RecorderError::Lifecycle(format!("session {id} is {:?}", session.state).to_lowercase()));
        }
        Ok(session)
    }

    /// Stages a batch. Seqs already accepted are skipped (retransmits); the
    /// rest must continue the dense sequence with non-decreasing timestamps.
    /// A rejected batch stages nothing.
    pub fn append_events(&self, actor: &Actor, id: &SessionId, batch: &[ActionEvent]) -> Result<AppendAck, RecorderError> {
        for _ in 0..CAS_ATTEMPTS {
            let mut session = self.open_session(actor, id)?;
            let mut next = session.next_seq();
            let mut last_at = session.staged_events.last().map(|e| e.at).unwrap_or(Timestamp::ZERO);
            let mut fresh = Vec::new();
            for event in batch {
                if event.seq < next {
                    let staged = &session.staged_events[event.seq as usize];
                    if staged != event {
                        return Err(RecorderError::Input(format!("seq {} was already accepted with different content", event.seq)));
                    }
                    continue;
                }
                if event.seq != next {
                    return Err(RecorderError::Ordering { expected: next, got: event.seq });
                }
                if event.at < last_at {
                    return Err(RecorderError::Input(format!("seq {} at {} precedes the previous event at {last_at}", event.seq, event.at)));
                }
                fresh.push(event.clone());
                last_at = event.at;
                next += 1;
            }
            if fresh.is_empty() {
                return Ok(AppendAck { accepted_through_seq: next.checked_sub(1) });
            }
            if next as usize > MAX_STAGED_EVENTS {
                return Err(RecorderError::Input(format!("sessions hold at most {MAX_STAGED_EVENTS} events")));
            }
            session.staged_events.extend(fresh);
            match self.repo.meta.update_session(&session) {
                Ok(_) => return Ok(AppendAck { accepted_through_seq: next.checked_sub(1) }),
                Err(StoreError::Conflict { .. }) => continue,
                Err(err) => return Err(err.into()),
            }
        }
        Err(RecorderError::Conflict(format!("session {id}")))
    }

    /// Builds, validates and stores the section, then inserts it into the
    /// tutorial at the session's slot. On validation failure the session
    /// stays open.
    pub fn finalize_session(&self, actor: &Actor, id: &SessionId, audio: &[u8], duration: Timestamp) -> Result<SectionRecording, RecorderError> {
        let session = self.open_session(actor, id)?;
        self.owned_draft(actor, &session.tutorial_id)?;

        let mut section = SectionRecording {
            schema_version: SCHEMA_VERSION,
            section_id: new_section_id(),
            language: session.language.clone(),
            duration,
            audio_ref: BUNDLE_AUDIO.to_owned(),
            notes_source: session.staged_notes.clone(),
            final_code: String::new(),
            transcript: self.transcriber.transcribe(audio, duration),
            events: session.staged_events.clone(),
        };
        // The client never supplies final_code; it is whatever the log replays to.
        let mut state = PlaybackState::initial(&section);
        if section.events.iter().try_for_each(|e| state.apply(e)).is_ok() {
            section.final_code = state.code();
        }
        let report = validate_section(&section);
        if !report.is_valid() {
            return Err(RecorderError::Invalid(report));
        }

        self.repo.store_coding_bundle(&session.tutorial_id, &section, audio)?;
        // Claim the session before touching the tutorial so that two racing
        // finalize calls cannot both insert a section.
        let claimed = RecordingSession { state: SessionState::Finalized, section_id: Some(section.section_id.clone()), ..session };
        let claimed = match self.repo.meta.update_session(&claimed) {
            Ok(claimed) => claimed,
            Err(err) => {
                let _ = self.repo.remove_section(&section.section_id);
                return Err(err.into());
            }
        };
        let sref = SectionRef { id: section.section_id.clone(), kind: SectionKind::Coding };
        if let Err(err) = self.insert_section(actor, &claimed.tutorial_id, Some(claimed.section_slot), sref) {
            let _ = self.repo.remove_section(&section.section_id);
            let reopened = RecordingSession { state: SessionState::Open, section_id: None, ..claimed };
            let _ = self.repo.meta.update_session(&reopened);
            return Err(err);
        }
        Ok(section)
    }

    /// Abandons an open session; nothing is persisted.
    pub fn discard_session(&self, actor: &Actor, id: &SessionId) -> Result<(), RecorderError> {
        let session = self.open_session(actor, id)?;
        self.repo.meta.update_session(&RecordingSession { state: SessionState::Discarded, staged_events: Vec::new(), ..session })?;
        Ok(())
    }
}
