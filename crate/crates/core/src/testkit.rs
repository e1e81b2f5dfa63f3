//! Random valid recordings and an independent replay oracle.
//!
//! The generator tracks pane text as `Vec<char>` lines of its own, so the
//! `final_code` it reports does not come from the replay engine. The oracle
//! below re-implements edit application the same naive way.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

use crate::model::{
    Action, ActionEvent, CodeEdit, Cue, EditKind, ExecutionMarker, Highlight, Pane, PaneId, PaneKind, PanelLayout, Position, Question, QuizSection,
    Scroll, SectionId, SectionRecording, Timestamp, NOTES_PANE, OUTPUT_PANE, SCHEMA_VERSION, BUNDLE_AUDIO,
};
use crate::search::SectionContent;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Converts a char index into (line, column) by counting newlines.
pub fn char_index_to_position(text: &[char], idx: usize) -> Position {
    let before = &text[..idx];
    let line = before.iter().filter(|&&c| c == '\n').count();
    let column = before.iter().rev().take_while(|&&c| c != '\n').count();
    Position::new(line as u32, column as u32)
}

/// Inverse of [`char_index_to_position`]; `None` when out of bounds.
pub fn position_to_char_index(text: &[char], pos: Position) -> Option<usize> {
    let mut line = 0;
    let mut line_start = 0;
    for (i, &c) in text.iter().enumerate() {
        if line == pos.line {
            break;
        }
        if c == '\n' {
            line += 1;
            line_start = i + 1;
        }
    }
    if line != pos.line {
        return None;
    }
    let line_len = text[line_start..].iter().take_while(|&&c| c != '\n').count();
    (pos.column as usize <= line_len).then_some(line_start + pos.column as usize)
}

/// Code visible at `t` by naive char-vector splicing of the edit events.
pub fn oracle_code_at(section: &SectionRecording, t: Timestamp) -> String {
    let mut panes: BTreeMap<PaneId, Vec<char>> = BTreeMap::new();
    for event in section.events.iter().filter(|e| e.at <= t) {
        if let Action::Edit(edit) = &event.action {
            let text = panes.entry(edit.pane_id.clone()).or_default();
            let idx = position_to_char_index(text, edit.position).expect("oracle: position in bounds");
            let chars: Vec<char> = edit.text.chars().collect();
            match edit.kind {
                EditKind::Insert => {
                    text.splice(idx..idx, chars);
                }
                EditKind::Delete => {
                    assert_eq!(&text[idx..idx + chars.len()], &chars[..], "oracle: delete mismatch");
                    text.drain(idx..idx + chars.len());
                }
            }
        }
    }
    panes.values().flat_map(|v| v.iter()).collect()
}

const WORDS: &[&str] = &["print", "total", "loop", "while", "for", "index", "value", "sum", "range", "def", "return", "list", "input", "count"];
const ALPHABET: &[char] = &['a', 'b', 'x', 'y', 'z', '_', '0', '1', ' ', ' ', '\n', '(', ')', ':', '=', 'é', 'ß', '\t'];

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub max_events: usize,
    pub code_panes: Vec<&'static str>,
    /// Probability that an event is a code edit.
    pub edit_weight: f64,
    /// Probability that typed text is a dictionary word rather than noise.
    pub word_weight: f64,
    pub max_gap_ms: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { max_events: 2000, code_panes: vec!["code"], edit_weight: 0.8, word_weight: 0.3, max_gap_ms: 60 }
    }
}

fn random_text(rng: &mut TestRng, cfg: &GenConfig) -> String {
    if rng.gen_bool(cfg.word_weight) {
        let mut w = WORDS.choose(rng).unwrap().to_string();
        w.push(*[' ', '\n', '(', ' '].choose(rng).unwrap());
        w
    } else {
        let len = rng.gen_range(1..=3);
        (0..len).map(|_| *ALPHABET.choose(rng).unwrap()).collect()
    }
}

fn random_layout(rng: &mut TestRng, code_panes: &[&str]) -> PanelLayout {
    let mut panes: Vec<Pane> = vec![
        Pane::new(NOTES_PANE, PaneKind::Notes, 0.0, 0.0, 0.5, 1.0),
        Pane::new("input", PaneKind::Input, 0.5, 0.6, 0.25, 0.4),
        Pane::new(OUTPUT_PANE, PaneKind::Output, 0.75, 0.6, 0.25, 0.4),
    ];
    for id in code_panes {
        panes.push(Pane::new(id, PaneKind::Code, 0.5, 0.0, 0.5, 0.6));
    }
    for p in &mut panes {
        p.x = (rng.gen_range(0..=8) as f64) / 8.0;
        p.y = (rng.gen_range(0..=8) as f64) / 8.0;
        p.width = (rng.gen_range(1..=8) as f64) / 8.0;
        p.height = (rng.gen_range(1..=8) as f64) / 8.0;
        p.visible = rng.gen_bool(0.9);
    }
    if rng.gen_bool(0.3) {
        let i = rng.gen_range(0..panes.len());
        panes[i].maximized = true;
    }
    panes.shuffle(rng);
    PanelLayout { panes }
}

/// A random valid section with up to `cfg.max_events` events.
pub fn random_section(rng: &mut TestRng, id: &str, cfg: &GenConfig) -> SectionRecording {
    let notes_words = rng.gen_range(0..40);
    let notes: String = (0..notes_words)
        .map(|i| {
            let w = WORDS.choose(rng).unwrap();
            if i % 7 == 6 {
                format!("{w}\n")
            } else {
                format!("{w} ")
            }
        })
        .collect();
    let notes_chars = notes.chars().count();
    let n_events = rng.gen_range(0..=cfg.max_events);

    let mut panes: BTreeMap<&'static str, Vec<char>> = BTreeMap::new();
    let mut clock = 0u64;
    let mut events = Vec::with_capacity(n_events);
    for seq in 0..n_events as u64 {
        // Same-timestamp bursts are common (paste, multi-pane updates).
        if !rng.gen_bool(0.15) {
            clock += rng.gen_range(1..=cfg.max_gap_ms);
        }
        let at = Timestamp(clock);
        let roll: f64 = rng.gen();
        // Highlights only target notes and code panes, whose lengths are tracked here.
        let action: Action = if roll < cfg.edit_weight {
            let pane = *cfg.code_panes.choose(rng).unwrap();
            let text = panes.entry(pane).or_default();
            if text.is_empty() || rng.gen_bool(0.7) {
                let idx = if rng.gen_bool(0.7) { text.len() } else { rng.gen_range(0..=text.len()) };
                let ins = random_text(rng, cfg);
                let pos = char_index_to_position(text, idx);
                text.splice(idx..idx, ins.chars());
                CodeEdit::insert(pane, pos, ins).into()
            } else {
                let start = rng.gen_range(0..text.len());
                let len = rng.gen_range(1..=(text.len() - start).min(4));
                let pos = char_index_to_position(text, start);
                let removed: String = text.drain(start..start + len).collect();
                CodeEdit::delete(pane, pos, removed).into()
            }
        } else if roll < cfg.edit_weight + 0.06 {
            let (pane, len) = if rng.gen_bool(0.5) || panes.is_empty() {
                (NOTES_PANE.to_owned(), notes_chars)
            } else {
                let (p, t) = panes.iter().nth(rng.gen_range(0..panes.len())).unwrap();
                (p.to_string(), t.len())
            };
            let start = rng.gen_range(0..=len);
            let end = rng.gen_range(start..=len);
            Highlight { pane_id: PaneId(pane), start: start as u32, end: end as u32, active: rng.gen_bool(0.7) }.into()
        } else if roll < cfg.edit_weight + 0.12 {
            let pane = [NOTES_PANE, "code", OUTPUT_PANE].choose(rng).unwrap();
            Scroll { pane_id: PaneId::new(*pane), fraction: rng.gen_range(0..=100) as f64 / 100.0 }.into()
        } else if roll < cfg.edit_weight + 0.16 && seq > 0 {
            let stdout = random_text(rng, cfg);
            ExecutionMarker { code_snapshot_seq: rng.gen_range(0..seq), stdin: random_text(rng, cfg), stdout, stderr: String::new() }.into()
        } else {
            random_layout(rng, &cfg.code_panes).into()
        };
        events.push(ActionEvent { seq, at, action });
    }
    let duration = clock + rng.gen_range(0..=2000);
    let mut transcript = Vec::new();
    let mut cue = 0;
    while cue + 1000 <= duration && transcript.len() < 6 {
        let end = (cue + rng.gen_range(500..=5000)).min(duration);
        let words = rng.gen_range(1..6);
        let text = (0..words).map(|_| *WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ");
        transcript.push(Cue { start: Timestamp(cue), end: Timestamp(end), text });
        cue = end + rng.gen_range(0..500);
    }
    SectionRecording {
        schema_version: SCHEMA_VERSION,
        section_id: SectionId::new(id),
        language: "python".into(),
        duration: Timestamp(duration),
        audio_ref: BUNDLE_AUDIO.to_owned(),
        notes_source: notes,
        final_code: panes.values().flat_map(|v| v.iter()).collect(),
        transcript,
        events,
    }
}

pub fn random_quiz(rng: &mut TestRng, id: &str) -> QuizSection {
    let questions = (0..rng.gen_range(1..5))
        .map(|_| {
            let choices: Vec<String> = (0..rng.gen_range(2..5)).map(|_| WORDS.choose(rng).unwrap().to_string()).collect();
            Question {
                prompt: format!("Which {} goes with {}?", WORDS.choose(rng).unwrap(), WORDS.choose(rng).unwrap()),
                correct_index: rng.gen_range(0..choices.len()),
                choices,
                explanation: WORDS.choose(rng).unwrap().to_string(),
                points: rng.gen_range(0..5),
            }
        })
        .collect();
    QuizSection { section_id: SectionId::new(id), questions }
}

/// A small tutorial of coding and quiz sections sharing a tiny vocabulary.
pub fn random_tutorial(rng: &mut TestRng, max_events: usize) -> Vec<SectionContent> {
    let cfg = GenConfig { max_events, word_weight: 0.6, ..GenConfig::default() };
    (0..rng.gen_range(1..5))
        .map(|i| {
            if rng.gen_bool(0.25) {
                SectionContent::Quiz(random_quiz(rng, &format!("q{i}")))
            } else {
                SectionContent::Coding(random_section(rng, &format!("s{i}"), &cfg))
            }
        })
        .collect()
}

/// A random query drawn from the shared vocabulary.
pub fn random_query(rng: &mut TestRng) -> String {
    let n = rng.gen_range(1..=2);
    (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn position_conversions_agree() {
        let text: Vec<char> = "ab\nçd\n\nx".chars().collect();
        for idx in 0..=text.len() {
            let pos = char_index_to_position(&text, idx);
            assert_eq!(position_to_char_index(&text, pos), Some(idx));
        }
        assert_eq!(position_to_char_index(&text, Position::new(0, 3)), None);
        assert_eq!(position_to_char_index(&text, Position::new(4, 0)), None);
    }

    #[test]
    fn oracle_matches_generator_final_code() {
        let mut r = rng(7);
        for i in 0..20 {
            let s = random_section(&mut r, &format!("s{i}"), &GenConfig { max_events: 300, ..GenConfig::default() });
            assert_eq!(oracle_code_at(&s, s.duration), s.final_code);
        }
    }
}
