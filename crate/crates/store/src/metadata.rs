use serde::{Deserialize, Serialize};
use tutorcast_core::model::{RecordingSession, SectionId, SectionKind, SessionId, Timestamp, Tutorial, TutorialId, UserId};

use crate::artifact::{ArtifactRef, BundleId};
use crate::StoreError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Author,
    Student,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserRecord {
    pub user_id: UserId,
    pub username: String,
    pub role: Role,
    /// PHC-style string; empty for accounts that only sign in externally.
    pub password_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_subject: Option<String>,
}

/// Where a section's bundle lives and what its files hash to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionRecord {
    pub section_id: SectionId,
    pub tutorial_id: TutorialId,
    pub kind: SectionKind,
    pub bundle_id: BundleId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<Timestamp>,
    pub artifacts: Vec<ArtifactRef>,
}

impl SectionRecord {
    pub fn artifact(&self, relative_path: &str) -> Option<&ArtifactRef> {
        self.artifacts.iter().find(|a| a.relative_path == relative_path)
    }
}

/// Users, tutorials, sections and recording sessions.
///
/// Tutorials and sessions carry a version counter. `insert_*` stores version
/// 1; `update_*` succeeds only if the stored version equals the argument's
/// version and returns the row with the version bumped.
pub trait MetadataStore: Send + Sync {
    fn insert_user(&self, user: &UserRecord) -> Result<(), StoreError>;
    fn user(&self, id: &UserId) -> Result<Option<UserRecord>, StoreError>;
    fn user_by_name(&self, username: &str) -> Result<Option<UserRecord>, StoreError>;

    fn insert_tutorial(&self, tutorial: &Tutorial) -> Result<Tutorial, StoreError>;
    fn tutorial(&self, id: &TutorialId) -> Result<Option<Tutorial>, StoreError>;
    fn update_tutorial(&self, tutorial: &Tutorial) -> Result<Tutorial, StoreError>;
    fn delete_tutorial(&self, id: &TutorialId, expected_version: u64) -> Result<(), StoreError>;
    fn tutorials_by_owner(&self, owner: &UserId) -> Result<Vec<Tutorial>, StoreError>;
    fn all_tutorials(&self) -> Result<Vec<Tutorial>, StoreError>;
    /// Released tutorials, oldest release first.
    fn list_released(&self) -> Result<Vec<Tutorial>, StoreError>;

    fn put_section(&self, record: &SectionRecord) -> Result<(), StoreError>;
    fn section(&self, id: &SectionId) -> Result<Option<SectionRecord>, StoreError>;
    fn delete_section(&self, id: &SectionId) -> Result<(), StoreError>;
    fn all_sections(&self) -> Result<Vec<SectionRecord>, StoreError>;

    fn insert_session(&self, session: &RecordingSession) -> Result<RecordingSession, StoreError>;
    fn session(&self, id: &SessionId) -> Result<Option<RecordingSession>, StoreError>;
    fn update_session(&self, session: &RecordingSession) -> Result<RecordingSession, StoreError>;
}

pub(crate) fn sort_released(tutorials: &mut [Tutorial]) {
    tutorials.sort_by(|a, b| (a.released_at, &a.tutorial_id).cmp(&(b.released_at, &b.tutorial_id)));
}
