use std::collections::BTreeSet;

use tutorcast_core::model::{QuizSection, RecordingSession, SectionId, SectionKind, SectionRef, Tutorial, TutorialId, TutorialStatus};

use crate::{Actor, Recorder, RecorderError};

pub(crate) fn new_section_id() -> SectionId {
    SectionId(format!("sec_{}", uuid::Uuid::new_v4().simple()))
}

impl Recorder {
    pub fn create_tutorial(&self, actor: &Actor, title: &str, language: &str) -> Result<Tutorial, RecorderError> {
        if actor.role != tutorcast_store::Role::Author {
            return Err(RecorderError::Unauthorized("authoring requires the author role".into()));
        }
        if title.trim().is_empty() {
            return Err(RecorderError::Input("title is empty".into()));
        }
        let id = TutorialId(format!("tut_{}", uuid::Uuid::new_v4().simple()));
        Ok(self.repo.meta.insert_tutorial(&Tutorial::new(id, title.trim(), language, actor.user_id.clone()))?)
    }

    /// Replaces the section order. `new_order` must be exactly a permutation
    /// of the current section ids.
    pub fn resequence_sections(&self, actor: &Actor, id: &TutorialId, new_order: &[SectionId]) -> Result<Tutorial, RecorderError> {
        self.update_draft(actor, id, |t| {
            let current: BTreeSet<&SectionId> = t.sections.iter().map(|s| &s.id).collect();
            let proposed: BTreeSet<&SectionId> = new_order.iter().collect();
            if proposed.len() != new_order.len() || proposed != current {
                return Err(RecorderError::Input("new order is not a permutation of the tutorial's sections".into()));
            }
            let reordered = new_order.iter().map(|sid| t.sections[t.section_index(sid).expect("checked above")].clone()).collect();
            t.sections = reordered;
            Ok(())
        })
        .map(|(t, ())| t)
    }

    /// Makes the tutorial visible to students. Releasing again is a no-op.
    pub fn release_tutorial(&self, actor: &Actor, id: &TutorialId) -> Result<Tutorial, RecorderError> {
        let current = self.owned(actor, id)?;
        if current.is_released() {
            return Ok(current);
        }
        let now = self.clock.now_ms();
        match self.update_draft(actor, id, |t| {
            if t.sections.is_empty() {
                return Err(RecorderError::Lifecycle(format!("tutorial {id} has no sections to release")));
            }
            t.status = TutorialStatus::Released;
            t.released_at = Some(now);
            Ok(())
        }) {
            Ok((t, ())) => Ok(t),
            // Lost a race against another release of the same tutorial.
            Err(RecorderError::Lifecycle(_)) if self.tutorial(id)?.is_released() => self.tutorial(id),
            Err(err) => Err(err),
        }
    }

    /// Removes a section from a draft tutorial and deletes its bundle.
    pub fn delete_section(&self, actor: &Actor, id: &TutorialId, section: &SectionId) -> Result<Tutorial, RecorderError> {
        let (tutorial, ()) = self.update_draft(actor, id, |t| {
            let idx = t.section_index(section).ok_or_else(|| RecorderError::NotFound { kind: "section", id: section.to_string() })?;
            t.sections.remove(idx);
            Ok(())
        })?;
        match self.repo.remove_section(section) {
            Ok(()) | Err(tutorcast_store::StoreError::NotFound { .. }) => Ok(tutorial),
            Err(err) => Err(err.into()),
        }
    }

    /// Re-record a section: the old recording is deleted and a new session
    /// opens on the same slot.
    pub fn redo_section(&self, actor: &Actor, id: &TutorialId, section: &SectionId, language: &str, notes_source: &str) -> Result<RecordingSession, RecorderError> {
        let slot = self.owned_draft(actor, id)?.section_index(section).ok_or_else(|| RecorderError::NotFound { kind: "section", id: section.to_string() })?;
        self.delete_section(actor, id, section)?;
        self.begin_session(actor, id, slot, language, notes_source)
    }

    /// Deletes a draft tutorial and all of its sections.
    pub fn delete_tutorial(&self, actor: &Actor, id: &TutorialId) -> Result<(), RecorderError> {
        let tutorial = self.owned_draft(actor, id)?;
        self.repo.meta.delete_tutorial(id, tutorial.version)?;
        for sref in &tutorial.sections {
            match self.repo.remove_section(&sref.id) {
                Ok(()) | Err(tutorcast_store::StoreError::NotFound { .. }) => {}
                Err(err) => return Err(err.into()),
            }
        }
        Ok(())
    }

    /// Stores a quiz and inserts it at `slot` (appended when `None`).
    pub fn add_quiz_section(&self, actor: &Actor, id: &TutorialId, slot: Option<usize>, quiz: &QuizSection) -> Result<(Tutorial, SectionId), RecorderError> {
        let current = self.owned_draft(actor, id)?;
        check_slot(slot.unwrap_or(current.sections.len()), current.sections.len())?;
        let quiz = QuizSection { section_id: new_section_id(), ..quiz.clone() };
        if let Err(err) = quiz.check() {
            return Err(RecorderError::Input(err));
        }
        self.repo.store_quiz_bundle(id, &quiz)?;
        let sref = SectionRef { id: quiz.section_id.clone(), kind: SectionKind::Quiz };
        match self.insert_section(actor, id, slot, sref) {
            Ok(t) => Ok((t, quiz.section_id)),
            Err(err) => {
                let _ = self.repo.remove_section(&quiz.section_id);
                Err(err)
            }
        }
    }

    pub(crate) fn insert_section(&self, actor: &Actor, id: &TutorialId, slot: Option<usize>, sref: SectionRef) -> Result<Tutorial, RecorderError> {
        self.update_draft(actor, id, |t| {
            // The list may have shrunk since the slot was chosen.
            let at = slot.unwrap_or(t.sections.len()).min(t.sections.len());
            t.sections.insert(at, sref.clone());
            Ok(())
        })
        .map(|(t, ())| t)
    }
}

pub(crate) fn check_slot(slot: usize, len: usize) -> Result<(), RecorderError> {
    if slot > len {
        return Err(RecorderError::Input(format!("slot {slot} is beyond the {len} existing sections")));
    }
    Ok(())
}
