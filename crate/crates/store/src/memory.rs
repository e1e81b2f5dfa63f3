use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use tutorcast_core::model::{RecordingSession, SectionId, SessionId, Tutorial, TutorialId, UserId};

use crate::metadata::{sort_released, MetadataStore, SectionRecord, UserRecord};
use crate::StoreError;

#[derive(Debug, Default)]
struct Tables {
    users: HashMap<UserId, UserRecord>,
    tutorials: BTreeMap<TutorialId, Tutorial>,
    sections: BTreeMap<SectionId, SectionRecord>,
    sessions: HashMap<SessionId, RecordingSession>,
}

/// In-process metadata store for tests and throwaway instances.
#[derive(Debug, Default)]
pub struct MemoryMetadata {
    tables: Mutex<Tables>,
}

impl MemoryMetadata {
    pub fn new() -> Self {
        Self::default()
    }

    fn tables(&self) -> std::sync::MutexGuard<'_, Tables> {
        self.tables.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
    }
}

impl MetadataStore for MemoryMetadata {
    fn insert_user(&self, user: &UserRecord) -> Result<(), StoreError> {
        let mut t = self.tables();
        if t.users.contains_key(&user.user_id) || t.users.values().any(|u| u.username == user.username) {
            return Err(StoreError::AlreadyExists { kind: "user", id: user.username.clone() });
        }
        t.users.insert(user.user_id.clone(), user.clone());
        Ok(())
    }

    fn user(&self, id: &UserId) -> Result<Option<UserRecord>, StoreError> {
        Ok(self.tables().users.get(id).cloned())
    }

    fn user_by_name(&self, username: &str) -> Result<Option<UserRecord>, StoreError> {
        Ok(self.tables().users.values().find(|u| u.username == username).cloned())
    }

    fn insert_tutorial(&self, tutorial: &Tutorial) -> Result<Tutorial, StoreError> {
        let mut t = self.tables();
        if t.tutorials.contains_key(&tutorial.tutorial_id) {
            return Err(StoreError::AlreadyExists { kind: "tutorial", id: tutorial.tutorial_id.to_string() });
        }
        let stored = Tutorial { version: 1, ..tutorial.clone() };
        t.tutorials.insert(stored.tutorial_id.clone(), stored.clone());
        Ok(stored)
    }

    fn tutorial(&self, id: &TutorialId) -> Result<Option<Tutorial>, StoreError> {
        Ok(self.tables().tutorials.get(id).cloned())
    }

    fn update_tutorial(&self, tutorial: &Tutorial) -> Result<Tutorial, StoreError> {
        let mut t = self.tables();
        let current = t.tutorials.get_mut(&tutorial.tutorial_id).ok_or_else(|| StoreError::not_found("tutorial", &tutorial.tutorial_id))?;
        if current.version != tutorial.version {
            return Err(StoreError::Conflict { kind: "tutorial", id: tutorial.tutorial_id.to_string(), expected: tutorial.version, found: current.version });
        }
        *current = Tutorial { version: tutorial.version + 1, ..tutorial.clone() };
        Ok(current.clone())
    }

    fn delete_tutorial(&self, id: &TutorialId, expected_version: u64) -> Result<(), StoreError> {
        let mut t = self.tables();
        let current = t.tutorials.get(id).ok_or_else(|| StoreError::not_found("tutorial", id))?;
        if current.version != expected_version {
            return Err(StoreError::Conflict { kind: "tutorial", id: id.to_string(), expected: expected_version, found: current.version });
        }
        t.tutorials.remove(id);
        Ok(())
    }

    fn tutorials_by_owner(&self, owner: &UserId) -> Result<Vec<Tutorial>, StoreError> {
        Ok(self.tables().tutorials.values().filter(|t| &t.owner == owner).cloned().collect())
    }

    fn all_tutorials(&self) -> Result<Vec<Tutorial>, StoreError> {
        Ok(self.tables().tutorials.values().cloned().collect())
    }

    fn list_released(&self) -> Result<Vec<Tutorial>, StoreError> {
        let mut out: Vec<Tutorial> = self.tables().tutorials.values().filter(|t| t.is_released()).cloned().collect();
        sort_released(&mut out);
        Ok(out)
    }

    fn put_section(&self, record: &SectionRecord) -> Result<(), StoreError> {
        self.tables().sections.insert(record.section_id.clone(), record.clone());
        Ok(())
    }

    fn section(&self, id: &SectionId) -> Result<Option<SectionRecord>, StoreError> {
        Ok(self.tables().sections.get(id).cloned())
    }

    fn delete_section(&self, id: &SectionId) -> Result<(), StoreError> {
        self.tables().sections.remove(id).map(|_| ()).ok_or_else(|| StoreError::not_found("section", id))
    }

    fn all_sections(&self) -> Result<Vec<SectionRecord>, StoreError> {
        Ok(self.tables().sections.values().cloned().collect())
    }

    fn insert_session(&self, session: &RecordingSession) -> Result<RecordingSession, StoreError> {
        let mut t = self.tables();
        if t.sessions.contains_key(&session.session_id) {
            return Err(StoreError::AlreadyExists { kind: "session", id: session.session_id.to_string() });
        }
        let stored = RecordingSession { version: 1, ..session.clone() };
        t.sessions.insert(stored.session_id.clone(), stored.clone());
        Ok(stored)
    }

    fn session(&self, id: &SessionId) -> Result<Option<RecordingSession>, StoreError> {
        Ok(self.tables().sessions.get(id).cloned())
    }

    fn update_session(&self, session: &RecordingSession) -> Result<RecordingSession, StoreError> {
        let mut t = self.tables();
        let current = t.sessions.get_mut(&session.session_id).ok_or_else(|| StoreError::not_found("session", &session.session_id))?;
        if current.version != session.version {
            return Err(StoreError::Conflict { kind: "session", id: session.session_id.to_string(), expected: session.version, found: current.version });
        }
        *current = RecordingSession { version: session.version + 1, ..session.clone() };
        Ok(current.clone())
    }
}
