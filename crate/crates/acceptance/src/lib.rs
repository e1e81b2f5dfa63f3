//! Brute-force oracles the acceptance run compares the real code against.
//! They avoid the snapshot index and the search index entirely.

use std::collections::BTreeSet;

use tutorcast_core::model::{SectionRecording, Timestamp};
use tutorcast_core::search::{ArtifactKind, SectionContent};
use tutorcast_core::testkit::oracle_code_at;
use tutorcast_core::{PlaybackState, ReplayError};

/// Folds every event with `at <= t` from the initial state, one by one.
pub fn replay_from_start(section: &SectionRecording, t: Timestamp) -> Result<PlaybackState, ReplayError> {
    let mut state = PlaybackState::initial(section);
    for event in section.events.iter().take_while(|e| e.at <= t) {
        state.apply(event)?;
    }
    state.playhead = t;
    Ok(state)
}

/// Maximal runs of alphanumerics and '_', lowercased.
pub fn words(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '_')).filter(|w| !w.is_empty()).map(str::to_lowercase).collect()
}

fn contains_all(text: &str, query: &BTreeSet<String>) -> bool {
    let w = words(text);
    query.iter().all(|q| w.contains(q))
}

pub type Hit = (String, ArtifactKind, Timestamp);

/// Scans notes lines, cues and quiz questions, and the code replayed at every
/// event boundary, in tutorial order.
pub fn search_oracle(tutorial: &[SectionContent], query: &str) -> Vec<Hit> {
    let q = words(query);
    let mut hits = Vec::new();
    for content in tutorial {
        let mut found: Vec<(Timestamp, ArtifactKind, usize)> = Vec::new();
        match content {
            SectionContent::Coding(s) => {
                found.extend(s.notes_source.lines().enumerate().filter(|(_, l)| contains_all(l, &q)).map(|(i, _)| (Timestamp::ZERO, ArtifactKind::Notes, i)));
                found.extend(s.transcript.iter().enumerate().filter(|(_, c)| contains_all(&c.text, &q)).map(|(i, c)| (c.start, ArtifactKind::Transcript, i)));
                let boundaries: BTreeSet<Timestamp> = s.events.iter().map(|e| e.at).collect();
                if let Some(at) = boundaries.into_iter().find(|&at| contains_all(&oracle_code_at(s, at), &q)) {
                    found.push((at, ArtifactKind::Code, 0));
                }
            }
            SectionContent::Quiz(quiz) => {
                for (i, question) in quiz.questions.iter().enumerate() {
                    let text = format!("{} {} {}", question.prompt, question.choices.join(" "), question.explanation);
                    if contains_all(&text, &q) {
                        found.push((Timestamp::ZERO, ArtifactKind::Quiz, i));
                    }
                }
            }
        }
        found.sort();
        hits.extend(found.into_iter().map(|(at, kind, _)| (content.section_id().to_string(), kind, at)));
    }
    hits
}

#[cfg(test)]
mod tests {
    use super::*;
    use tutorcast_core::script::reference_recording;
    use tutorcast_core::state_at;

    #[test]
    fn fold_agrees_at_the_end() {
        let s = reference_recording("r");
        assert_eq!(replay_from_start(&s, s.duration).unwrap(), state_at(&s, s.duration, None).unwrap());
        assert_eq!(replay_from_start(&s, Timestamp::ZERO).unwrap().code(), "");
    }

    #[test]
    fn oracle_finds_typed_code() {
        let s = reference_recording("r");
        let hits = search_oracle(&[SectionContent::Coding(s)], "numbers");
        assert!(hits.iter().any(|h| h.1 == ArtifactKind::Code && h.2 > Timestamp::ZERO));
    }
}
