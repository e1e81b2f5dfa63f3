//! Keyword search across a tutorial's text artifacts, anchored to the timeline.
//!
//! Text is split into tokens (runs of alphanumerics and `_`, lowercased). A
//! query matches a unit of text when every query token occurs among the
//! unit's tokens. Static units are notes lines, transcript cues and quiz
//! questions. For code the unit is the whole editor content, which changes
//! over time: a code hit reports the first instant the match exists.
//!
//! Playback state is constant between events, so code presence is only
//! evaluated once per distinct event timestamp.

mod tokenize;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{QuizSection, SectionId, SectionRecording, Timestamp};
use crate::replay::{state_at, PlaybackState};

pub use tokenize::{tokenize, Token};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    Notes,
    Quiz,
    Transcript,
    Code,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineHit {
    pub section_id: SectionId,
    pub artifact_kind: ArtifactKind,
    /// First instant the match is visible (0 for notes and quiz).
    pub at: Timestamp,
    pub snippet: String,
    /// Character range of the first matched token inside `snippet`.
    pub match_start: usize,
    pub match_end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("search query has no keywords")]
    EmptyQuery,
}

/// Section content handed to the index, in tutorial order.
#[derive(Debug, Clone)]
pub enum SectionContent {
    Coding(SectionRecording),
    Quiz(QuizSection),
}

impl SectionContent {
    pub fn section_id(&self) -> &SectionId {
        match self {
            SectionContent::Coding(s) => &s.section_id,
            SectionContent::Quiz(q) => &q.section_id,
        }
    }
}

/// Query tokens, deduplicated, in first-occurrence order.
pub fn query_tokens(keywords: &str) -> Result<Vec<String>, SearchError> {
    let mut seen = BTreeSet::new();
    let tokens: Vec<String> = tokenize(keywords.trim()).into_iter().map(|t| t.text).filter(|t| seen.insert(t.clone())).collect();
    if tokens.is_empty() {
        return Err(SearchError::EmptyQuery);
    }
    Ok(tokens)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct UnitId {
    section: usize,
    kind: ArtifactKind,
    unit: usize,
}

#[derive(Debug, Clone)]
struct StaticUnit {
    at: Timestamp,
    text: String,
}

/// Presence of each token in the code over the distinct event timestamps.
#[derive(Debug, Clone, Default)]
struct CodeTimeline {
    boundaries: Vec<Timestamp>,
    /// Half-open runs of boundary indices during which the token is present.
    presence: HashMap<String, Vec<(usize, usize)>>,
}

impl CodeTimeline {
    fn build(section: &SectionRecording) -> Self {
        let mut timeline = CodeTimeline::default();
        let mut state = PlaybackState::initial(section);
        let mut open: BTreeMap<String, usize> = BTreeMap::new();
        let events = &section.events;
        let mut i = 0;
        while i < events.len() {
            let at = events[i].at;
            while i < events.len() && events[i].at == at {
                // Invalid sections are rejected before indexing; a failure here
                // would only make later states incomplete.
                if state.apply(&events[i]).is_err() {
                    return timeline;
                }
                i += 1;
            }
            let idx = timeline.boundaries.len();
            timeline.boundaries.push(at);
            let present: BTreeSet<String> = tokenize(&state.code()).into_iter().map(|t| t.text).collect();
            open.retain(|token, start| {
                if present.contains(token) {
                    true
                } else {
                    timeline.presence.entry(token.clone()).or_default().push((*start, idx));
                    false
                }
            });
            for token in present {
                open.entry(token).or_insert(idx);
            }
        }
        let end = timeline.boundaries.len();
        for (token, start) in open {
            timeline.presence.entry(token).or_default().push((start, end));
        }
        timeline
    }

    /// Earliest boundary index at which every token is present.
    fn first_all_present(&self, tokens: &[String]) -> Option<usize> {
        let mut runs: Vec<(usize, usize)> = self.presence.get(tokens.first()?)?.clone();
        for token in &tokens[1..] {
            runs = intersect(&runs, self.presence.get(token)?);
            if runs.is_empty() {
                return None;
            }
        }
        runs.first().map(|r| r.0)
    }
}

fn intersect(a: &[(usize, usize)], b: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        let start = a[i].0.max(b[j].0);
        let end = a[i].1.min(b[j].1);
        if start < end {
            out.push((start, end));
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// Inverted index over one tutorial.
#[derive(Debug, Clone)]
pub struct TutorialIndex {
    sections: Vec<SectionContent>,
    units: BTreeMap<UnitId, StaticUnit>,
    postings: HashMap<String, Vec<UnitId>>,
    code: Vec<Option<CodeTimeline>>,
}

fn quiz_text(q: &crate::model::Question) -> String {
    let mut text = q.prompt.clone();
    for choice in &q.choices {
        text.push_str(" | ");
        text.push_str(choice);
    }
    text.push_str(" | ");
    text.push_str(&q.explanation);
    text
}

impl TutorialIndex {
    pub fn build(sections: Vec<SectionContent>) -> Self {
        let mut units = BTreeMap::new();
        let mut code = Vec::with_capacity(sections.len());
        for (section_idx, content) in sections.iter().enumerate() {
            let mut add = |kind, unit, at, text: String| {
                units.insert(UnitId { section: section_idx, kind, unit }, StaticUnit { at, text });
            };
            match content {
                SectionContent::Coding(s) => {
                    for (n, line) in s.notes_source.lines().enumerate() {
                        add(ArtifactKind::Notes, n, Timestamp::ZERO, line.to_owned());
                    }
                    for (n, cue) in s.transcript.iter().enumerate() {
                        add(ArtifactKind::Transcript, n, cue.start, cue.text.clone());
                    }
                    code.push(Some(CodeTimeline::build(s)));
                }
                SectionContent::Quiz(q) => {
                    for (n, question) in q.questions.iter().enumerate() {
                        add(ArtifactKind::Quiz, n, Timestamp::ZERO, quiz_text(question));
                    }
                    code.push(None);
                }
            }
        }
        let mut postings: HashMap<String, Vec<UnitId>> = HashMap::new();
        for (id, unit) in &units {
            let distinct: BTreeSet<String> = tokenize(&unit.text).into_iter().map(|t| t.text).collect();
            for token in distinct {
                postings.entry(token).or_default().push(*id);
            }
        }
        TutorialIndex { sections, units, postings, code }
    }

    pub fn sections(&self) -> &[SectionContent] {
        &self.sections
    }

    /// Hits ordered by section order, then timeline position.
    pub fn search(&self, keywords: &str) -> Result<Vec<TimelineHit>, SearchError> {
        let tokens = query_tokens(keywords)?;
        let mut keyed: Vec<((usize, Timestamp, ArtifactKind, usize), TimelineHit)> = Vec::new();

        if let Some(mut matched) = self.postings.get(&tokens[0]).cloned() {
            for token in &tokens[1..] {
                let other = self.postings.get(token).map(Vec::as_slice).unwrap_or(&[]);
                matched.retain(|id| other.binary_search(id).is_ok());
            }
            for id in matched {
                let unit = &self.units[&id];
                let (snippet, match_start, match_end) = snippet_for(&unit.text, &tokens[0]);
                keyed.push((
                    (id.section, unit.at, id.kind, id.unit),
                    TimelineHit {
                        section_id: self.sections[id.section].section_id().clone(),
                        artifact_kind: id.kind,
                        at: unit.at,
                        snippet,
                        match_start,
                        match_end,
                    },
                ));
            }
        }

        for (section_idx, timeline) in self.code.iter().enumerate() {
            let (Some(timeline), SectionContent::Coding(section)) = (timeline, &self.sections[section_idx]) else {
                continue;
            };
            if let Some(boundary) = timeline.first_all_present(&tokens) {
                let at = timeline.boundaries[boundary];
                let code = state_at(section, at, None).map(|s| s.code()).unwrap_or_default();
                let (snippet, match_start, match_end) = snippet_for(&code, &tokens[0]);
                keyed.push((
                    (section_idx, at, ArtifactKind::Code, 0),
                    TimelineHit { section_id: section.section_id.clone(), artifact_kind: ArtifactKind::Code, at, snippet, match_start, match_end },
                ));
            }
        }

        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(keyed.into_iter().map(|(_, hit)| hit).collect())
    }
}

/// The line holding the first occurrence of `token`, with its character span.
fn snippet_for(text: &str, token: &str) -> (String, usize, usize) {
    for line in text.lines() {
        if let Some(t) = tokenize(line).into_iter().find(|t| t.text == token) {
            return (line.to_owned(), t.start, t.end);
        }
    }
    (String::new(), 0, 0)
}
