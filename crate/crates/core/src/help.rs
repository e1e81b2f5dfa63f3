//! Contextual help: turn a runtime error into a clean search query and ask a
//! Q&A resource for matching postings.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resource {
    pub title: String,
    pub url: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HelpQuery {
    pub normalized_error: String,
    pub language_id: String,
    pub resources: Vec<Resource>,
    /// Set when the provider could not be reached; resources are then empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provider_warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HelpError {
    #[error("error text is empty")]
    EmptyError,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("help provider is disabled")]
    Disabled,
    #[error("help provider unreachable: {0}")]
    Unreachable(String),
    #[error("help provider returned an unusable response: {0}")]
    BadResponse(String),
}

/// A source of Q&A postings for a normalized error message.
pub trait QaClient: Send + Sync {
    fn lookup(&self, query: &str, language_id: &str) -> Result<Vec<Resource>, ProviderError>;
}

/// Always unavailable. Used when no provider is configured.
#[derive(Debug, Default, Clone, Copy)]
pub struct DisabledClient;

impl QaClient for DisabledClient {
    fn lookup(&self, _query: &str, _language_id: &str) -> Result<Vec<Resource>, ProviderError> {
        Err(ProviderError::Disabled)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureEntry {
    /// Case-insensitive substring of the normalized query.
    pub pattern: String,
    pub title: String,
    pub url: String,
    pub score: f64,
}

/// Offline client answering from a canned list of postings.
#[derive(Debug, Clone, Default)]
pub struct FixtureClient {
    entries: Vec<FixtureEntry>,
}

impl FixtureClient {
    pub fn new(entries: Vec<FixtureEntry>) -> Self {
        FixtureClient { entries }
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, serde_json::Error> {
        Ok(FixtureClient { entries: serde_json::from_slice(bytes)? })
    }
}

impl QaClient for FixtureClient {
    fn lookup(&self, query: &str, _language_id: &str) -> Result<Vec<Resource>, ProviderError> {
        let query = query.to_lowercase();
        Ok(self
            .entries
            .iter()
            .filter(|e| query.contains(&e.pattern.to_lowercase()))
            .map(|e| Resource { title: e.title.clone(), url: e.url.clone(), score: e.score })
            .collect())
    }
}

macro_rules! re {
    ($name:ident, $pat:expr) => {
        static $name: LazyLock<Regex> = LazyLock::new(|| Regex::new($pat).unwrap());
    };
}

re!(PY_FRAME, r#"^\s*File "[^"]*", line \d+(?:, in .*)?$"#);
re!(JVM_FRAME, r"^\s*at [\w$.<>/]+\(.*\)$");
re!(TRACEBACK_HEADER, r"^Traceback \(most recent call last\):$");
re!(CARET_LINE, r"^[\s^~]+$");
re!(SOURCE_FILE, r"\b[\w\-]+\.(?:py|java|class|c|h|cc|cpp|hpp|js|ts|rs|go|rb|kt|cs)(?::\d+)+\b");
re!(PATH, r"(?:[A-Za-z]:\\|~/|\.{1,2}/|/)[\w.\-@]+(?:[/\\][\w.\-@]+)*[/\\]?");
re!(PAREN_LINE, r"(?i)\(\s*(?:on )?line \d+(?:,\s*col(?:umn)? \d+)?\s*\)");
re!(LINE_NO, r"(?i)\b(?:on |at )?line \d+\b");
re!(COLUMN_NO, r"(?i)\bcol(?:umn)? \d+\b");
re!(POSITION_SUFFIX, r":\d+(?::\d+)*\b");
re!(ADDRESS, r"\b0x[0-9a-fA-F]+");
re!(EMAIL, r"[\w.+\-]+@[\w\-]+(?:\.[\w\-]+)+");
re!(SPACES, r"[ \t]{2,}");
re!(SPACE_BEFORE_PUNCT, r"[ \t]+([,.;:)])");
re!(EMPTY_QUOTES, r#"(?:""|''|\(\)|<>)"#);
re!(LEADING_PUNCT, r"^[\s,;:]+");
re!(TRAILING_PUNCT, r"[\s,;:]+$");

fn clean_line(line: &str) -> String {
    let mut s = line.to_owned();
    for re in [&*SOURCE_FILE, &*PATH, &*PAREN_LINE, &*LINE_NO, &*COLUMN_NO, &*ADDRESS, &*EMAIL] {
        s = re.replace_all(&s, "").into_owned();
    }
    if s == line {
        return s.trim().to_owned();
    }
    s = POSITION_SUFFIX.replace_all(&s, "").into_owned();
    s = EMPTY_QUOTES.replace_all(&s, "").into_owned();
    s = SPACES.replace_all(&s, " ").into_owned();
    s = SPACE_BEFORE_PUNCT.replace_all(&s, "$1").into_owned();
    s = LEADING_PUNCT.replace_all(&s, "").into_owned();
    s = TRAILING_PUNCT.replace_all(&s, "").into_owned();
    s.trim().to_owned()
}

fn normalize_once(text: &str) -> String {
    let mut out: Vec<String> = Vec::new();
    let mut frame_indent: Option<usize> = None;
    for raw in text.lines() {
        let indent = raw.len() - raw.trim_start().len();
        // Python echoes the offending source line, indented deeper than its frame.
        if let Some(frame) = frame_indent.take() {
            if indent > frame && !raw.trim().is_empty() {
                continue;
            }
        }
        if PY_FRAME.is_match(raw) {
            frame_indent = Some(indent);
            continue;
        }
        if JVM_FRAME.is_match(raw) || TRACEBACK_HEADER.is_match(raw.trim()) || CARET_LINE.is_match(raw) {
            continue;
        }
        let line = clean_line(raw);
        if !line.is_empty() {
            out.push(line);
        }
    }
    out.join("\n")
}

/// Strips file paths, line and column numbers, memory addresses and user
/// identifiers from an error message. Idempotent; clean input comes back as is.
pub fn normalize_error(text: &str) -> String {
    let mut current = normalize_once(text);
    for _ in 0..8 {
        let next = normalize_once(&current);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

/// Builds the help query and asks `client` for resources, ranked by score.
/// A provider failure yields an empty resource list with a warning.
pub fn contextual_help(error_text: &str, language_id: &str, client: &dyn QaClient) -> Result<HelpQuery, HelpError> {
    if error_text.trim().is_empty() {
        return Err(HelpError::EmptyError);
    }
    let normalized_error = normalize_error(error_text);
    let (resources, provider_warning) = match client.lookup(&normalized_error, language_id) {
        Ok(mut resources) => {
            resources.sort_by(|a, b| b.score.total_cmp(&a.score));
            (resources, None)
        }
        Err(err) => (Vec::new(), Some(err.to_string())),
    };
    Ok(HelpQuery { normalized_error, language_id: language_id.to_owned(), resources, provider_warning })
}
