use std::path::Path;
use std::sync::{Mutex, MutexGuard};

use rusqlite::{params, Connection, OptionalExtension};
use serde::de::DeserializeOwned;
use serde::Serialize;
use tutorcast_core::model::{RecordingSession, SectionId, SessionId, Tutorial, TutorialId, TutorialStatus, UserId};

use crate::metadata::{MetadataStore, SectionRecord, UserRecord};
use crate::StoreError;

const SCHEMA: &str = "
CREATE TABLE IF NOT EXISTS users (
    user_id   TEXT PRIMARY KEY,
    username  TEXT NOT NULL UNIQUE,
    body      TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS tutorials (
    tutorial_id TEXT PRIMARY KEY,
    owner       TEXT NOT NULL,
    released    INTEGER NOT NULL,
    released_at INTEGER,
    version     INTEGER NOT NULL,
    body        TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS tutorials_owner ON tutorials(owner);
CREATE INDEX IF NOT EXISTS tutorials_released ON tutorials(released, released_at);
CREATE TABLE IF NOT EXISTS sections (
    section_id  TEXT PRIMARY KEY,
    tutorial_id TEXT NOT NULL,
    body        TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS sessions (
    session_id TEXT PRIMARY KEY,
    version    INTEGER NOT NULL,
    body       TEXT NOT NULL
);
";

/// Metadata in one SQLite file. Rows keep their JSON body next to the
/// columns used for lookups and version checks.
pub struct SqliteMetadata {
    conn: Mutex<Connection>,
}

impl std::fmt::Debug for SqliteMetadata {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SqliteMetadata").finish_non_exhaustive()
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, StoreError> {
    Ok(serde_json::to_string(value)?)
}

fn from_json<T: DeserializeOwned>(text: String) -> Result<T, StoreError> {
    Ok(serde_json::from_str(&text)?)
}

impl SqliteMetadata {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let conn = Connection::open(path)?;
        conn.pragma_update(None, "journal_mode", "WAL")?;
        conn.pragma_update(None, "synchronous", "NORMAL")?;
        Self::init(conn)
    }

    pub fn open_in_memory() -> Result<Self, StoreError> {
        Self::init(Connection::open_in_memory()?)
    }

    fn init(conn: Connection) -> Result<Self, StoreError> {
        conn.execute_batch(SCHEMA)?;
        Ok(SqliteMetadata { conn: Mutex::new(conn) })
    }

    fn conn(&self) -> MutexGuard<'_, Connection> {
        self.conn.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
    }

    fn bodies<T: DeserializeOwned>(&self, sql: &str, args: impl rusqlite::Params) -> Result<Vec<T>, StoreError> {
        let conn = self.conn();
        let mut stmt = conn.prepare_cached(sql)?;
        let rows = stmt.query_map(args, |row| row.get::<_, String>(0))?;
        rows.map(|r| from_json(r?)).collect()
    }

    fn body<T: DeserializeOwned>(&self, sql: &str, args: impl rusqlite::Params) -> Result<Option<T>, StoreError> {
        let conn = self.conn();
        let text: Option<String> = conn.query_row(sql, args, |row| row.get(0)).optional()?;
        text.map(from_json).transpose()
    }
}

fn is_unique_violation(err: &rusqlite::Error) -> bool {
    matches!(err, rusqlite::Error::SqliteFailure(e, _) if e.code == rusqlite::ErrorCode::ConstraintViolation)
}

impl MetadataStore for SqliteMetadata {
    fn insert_user(&self, user: &UserRecord) -> Result<(), StoreError> {
        let body = to_json(user)?;
        match self.conn().execute("INSERT INTO users (user_id, username, body) VALUES (?1, ?2, ?3)", params![user.user_id.as_str(), user.username, body]) {
            Ok(_) => Ok(()),
            Err(err) if is_unique_violation(&err) => Err(StoreError::AlreadyExists { kind: "user", id: user.username.clone() }),
            Err(err) => Err(err.into()),
        }
    }

    fn user(&self, id: &UserId) -> Result<Option<UserRecord>, StoreError> {
        self.body("SELECT body FROM users WHERE user_id = ?1", [id.as_str()])
    }

    fn user_by_name(&self, username: &str) -> Result<Option<UserRecord>, StoreError> {
        self.body("SELECT body FROM users WHERE username = ?1", [username])
    }

    fn insert_tutorial(&self, tutorial: &Tutorial) -> Result<Tutorial, StoreError> {
        let stored = Tutorial { version: 1, ..tutorial.clone() };
        let result = self.conn().execute(
            "INSERT INTO tutorials (tutorial_id, owner, released, released_at, version, body) VALUES (?1, ?2, ?3, ?4, 1, ?5)",
            params![stored.tutorial_id.as_str(), stored.owner.as_str(), stored.status == TutorialStatus::Released, stored.released_at, to_json(&stored)?],
        );
        match result {
            Ok(_) => Ok(stored),
            Err(err) if is_unique_violation(&err) => Err(StoreError::AlreadyExists { kind: "tutorial", id: stored.tutorial_id.to_string() }),
            Err(err) => Err(err.into()),
        }
    }

    fn tutorial(&self, id: &TutorialId) -> Result<Option<Tutorial>, StoreError> {
        self.body("SELECT body FROM tutorials WHERE tutorial_id = ?1", [id.as_str()])
    }

    fn update_tutorial(&self, tutorial: &Tutorial) -> Result<Tutorial, StoreError> {
        let stored = Tutorial { version: tutorial.version + 1, ..tutorial.clone() };
        let conn = self.conn();
        let changed = conn.execute(
            "UPDATE tutorials SET owner = ?2, released = ?3, released_at = ?4, version = ?5, body = ?6 WHERE tutorial_id = ?1 AND version = ?7",
            params![
                stored.tutorial_id.as_str(),
                stored.owner.as_str(),
                stored.status == TutorialStatus::Released,
                stored.released_at,
                stored.version,
                to_json(&stored)?,
                tutorial.version
            ],
        )?;
        if changed == 1 {
            return Ok(stored);
        }
        let found: Option<u64> = conn.query_row("SELECT version FROM tutorials WHERE tutorial_id = ?1", [tutorial.tutorial_id.as_str()], |r| r.get(0)).optional()?;
        Err(match found {
            Some(found) => StoreError::Conflict { kind: "tutorial", id: tutorial.tutorial_id.to_string(), expected: tutorial.version, found },
            None => StoreError::not_found("tutorial", &tutorial.tutorial_id),
        })
    }

    fn delete_tutorial(&self, id: &TutorialId, expected_version: u64) -> Result<(), StoreError> {
        let conn = self.conn();
        if conn.execute("DELETE FROM tutorials WHERE tutorial_id = ?1 AND version = ?2", params![id.as_str(), expected_version])? == 1 {
            return Ok(());
        }
        let found: Option<u64> = conn.query_row("SELECT version FROM tutorials WHERE tutorial_id = ?1", [id.as_str()], |r| r.get(0)).optional()?;
        Err(match found {
            Some(found) => StoreError::Conflict { kind: "tutorial", id: id.to_string(), expected: expected_version, found },
            None => StoreError::not_found("tutorial", id),
        })
    }

    fn tutorials_by_owner(&self, owner: &UserId) -> Result<Vec<Tutorial>, StoreError> {
        self.bodies("SELECT body FROM tutorials WHERE owner = ?1 ORDER BY tutorial_id", [owner.as_str()])
    }

    fn all_tutorials(&self) -> Result<Vec<Tutorial>, StoreError> {
        self.bodies("SELECT body FROM tutorials ORDER BY tutorial_id", [])
    }

    fn list_released(&self) -> Result<Vec<Tutorial>, StoreError> {
        self.bodies("SELECT body FROM tutorials WHERE released = 1 ORDER BY released_at, tutorial_id", [])
    }

    fn put_section(&self, record: &SectionRecord) -> Result<(), StoreError> {
        self.conn().execute(
            "INSERT INTO sections (section_id, tutorial_id, body) VALUES (?1, ?2, ?3)
             ON CONFLICT(section_id) DO UPDATE SET tutorial_id = excluded.tutorial_id, body = excluded.body",
            params![record.section_id.as_str(), record.tutorial_id.as_str(), to_json(record)?],
        )?;
        Ok(())
    }

    fn section(&self, id: &SectionId) -> Result<Option<SectionRecord>, StoreError> {
        self.body("SELECT body FROM sections WHERE section_id = ?1", [id.as_str()])
    }

    fn delete_section(&self, id: &SectionId) -> Result<(), StoreError> {
        match self.conn().execute("DELETE FROM sections WHERE section_id = ?1", [id.as_str()])? {
            0 => Err(StoreError::not_found("section", id)),
            _ => Ok(()),
        }
    }

    fn all_sections(&self) -> Result<Vec<SectionRecord>, StoreError> {
        self.bodies("SELECT body FROM sections ORDER BY section_id", [])
    }

    fn insert_session(&self, session: &RecordingSession) -> Result<RecordingSession, StoreError> {
        let stored = RecordingSession { version: 1, ..session.clone() };
        match self.conn().execute("INSERT INTO sessions (session_id, version, body) VALUES (?1, 1, ?2)", params![stored.session_id.as_str(), to_json(&stored)?]) {
            Ok(_) => Ok(stored),
            Err(err) if is_unique_violation(&err) => Err(StoreError::AlreadyExists { kind: "session", id: stored.session_id.to_string() }),
            Err(err) => Err(err.into()),
        }
    }

    fn session(&self, id: &SessionId) -> Result<Option<RecordingSession>, StoreError> {
        self.body("SELECT body FROM sessions WHERE session_id = ?1", [id.as_str()])
    }

    fn update_session(&self, session: &RecordingSession) -> Result<RecordingSession, StoreError> {
        let stored = RecordingSession { version: session.version + 1, ..session.clone() };
        let conn = self.conn();
        let changed = conn.execute(
            "UPDATE sessions SET version = ?2, body = ?3 WHERE session_id = ?1 AND version = ?4",
            params![stored.session_id.as_str(), stored.version, to_json(&stored)?, session.version],
        )?;
        if changed == 1 {
            return Ok(stored);
        }
        let found: Option<u64> = conn.query_row("SELECT version FROM sessions WHERE session_id = ?1", [session.session_id.as_str()], |r| r.get(0)).optional()?;
        Err(match found {
            Some(found) => StoreError::Conflict { kind: "session", id: session.session_id.to_string(), expected: session.version, found },
            None => StoreError::not_found("session", &session.session_id),
        })
    }
}
