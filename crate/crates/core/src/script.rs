//! Scripted recordings: drive a virtual author through typing, highlighting,
//! scrolling and running code to produce a valid [`SectionRecording`].
//!
//! Used for demos, fixtures and load-test provisioning.

use std::collections::BTreeMap;

use crate::model::{
    ActionEvent, CodeEdit, Cue, ExecutionMarker, Highlight, PaneId, PanelLayout, Position, Scroll, SectionId, SectionRecording, Timestamp, CODE_PANE,
    SCHEMA_VERSION, BUNDLE_AUDIO,
};
use crate::replay::Buffer;

#[derive(Debug, Clone)]
pub struct Script {
    section_id: SectionId,
    language: String,
    notes: String,
    clock: u64,
    events: Vec<ActionEvent>,
    buffers: BTreeMap<PaneId, Buffer>,
    transcript: Vec<Cue>,
}

impl Script {
    pub fn new(section_id: impl Into<String>, language: impl Into<String>) -> Self {
        Script {
            section_id: SectionId(section_id.into()),
            language: language.into(),
            notes: String::new(),
            clock: 0,
            events: Vec::new(),
            buffers: BTreeMap::new(),
            transcript: Vec::new(),
        }
    }

    pub fn notes(mut self, markdown: impl Into<String>) -> Self {
        self.notes = markdown.into();
        self
    }

    pub fn now(&self) -> Timestamp {
        Timestamp(self.clock)
    }

    pub fn wait(&mut self, ms: u64) -> &mut Self {
        self.clock += ms;
        self
    }

    fn push(&mut self, action: impl Into<crate::model::Action>) {
        let seq = self.events.len() as u64;
        self.events.push(ActionEvent::new(seq, Timestamp(self.clock), action));
    }

    fn buffer(&mut self, pane: &str) -> &mut Buffer {
        self.buffers.entry(PaneId::new(pane)).or_default()
    }

    /// Types `text` at the pane's cursor, one keystroke per character.
    pub fn type_text(&mut self, pane: &str, text: &str, ms_per_key: u64) -> &mut Self {
        for ch in text.chars() {
            let pos = self.buffer(pane).cursor;
            let key = ch.to_string();
            self.push(CodeEdit::insert(pane, pos, key.clone()));
            self.buffer(pane).insert(pos, &key).expect("cursor is always in bounds");
            self.clock += ms_per_key;
        }
        self
    }

    /// Pastes `text` at the cursor as a single edit.
    pub fn paste(&mut self, pane: &str, text: &str) -> &mut Self {
        let pos = self.buffer(pane).cursor;
        self.push(CodeEdit::insert(pane, pos, text));
        self.buffer(pane).insert(pos, text).expect("cursor is always in bounds");
        self
    }

    /// Deletes `count` characters before the cursor, one keystroke each.
    pub fn backspace(&mut self, pane: &str, count: usize, ms_per_key: u64) -> &mut Self {
        for _ in 0..count {
            let buf = self.buffer(pane);
            let end = buf.byte_offset(buf.cursor).expect("cursor in bounds");
            let Some(ch) = buf.text[..end].chars().next_back() else { break };
            let start = end - ch.len_utf8();
            let before = &buf.text[..start];
            let line = before.matches('\n').count() as u32;
            let column = before.rsplit('\n').next().unwrap_or("").chars().count() as u32;
            let pos = Position::new(line, column);
            let key = ch.to_string();
            self.push(CodeEdit::delete(pane, pos, key.clone()));
            self.buffer(pane).delete(pos, &key).expect("deleting what precedes the cursor");
            self.clock += ms_per_key;
        }
        self
    }

    pub fn highlight(&mut self, pane: &str, start: u32, end: u32, hold_ms: u64) -> &mut Self {
        self.push(Highlight { pane_id: pane.into(), start, end, active: true });
        self.clock += hold_ms;
        self.push(Highlight { pane_id: pane.into(), start, end, active: false });
        self
    }

    /// Highlights the first occurrence of `needle` in the notes.
    pub fn highlight_notes(&mut self, pane: &str, needle: &str, hold_ms: u64) -> &mut Self {
        if let Some(byte) = self.notes.find(needle) {
            let start = self.notes[..byte].chars().count() as u32;
            let end = start + needle.chars().count() as u32;
            self.highlight(pane, start, end, hold_ms);
        }
        self
    }

    pub fn scroll(&mut self, pane: &str, fraction: f64) -> &mut Self {
        self.push(Scroll { pane_id: pane.into(), fraction });
        self
    }

    pub fn layout(&mut self, layout: PanelLayout) -> &mut Self {
        self.push(layout);
        self
    }

    /// Records a program run with its captured streams.
    pub fn run(&mut self, stdin: &str, stdout: &str, stderr: &str) -> &mut Self {
        if self.events.is_empty() {
            self.push(Scroll { pane_id: CODE_PANE.into(), fraction: 0.0 });
        }
        let code_snapshot_seq = self.events.len() as u64 - 1;
        self.push(ExecutionMarker { code_snapshot_seq, stdin: stdin.into(), stdout: stdout.into(), stderr: stderr.into() });
        self
    }

    pub fn caption(&mut self, start_ms: u64, end_ms: u64, text: &str) -> &mut Self {
        self.transcript.push(Cue { start: Timestamp(start_ms), end: Timestamp(end_ms), text: text.into() });
        self
    }

    pub fn code(&self) -> String {
        self.buffers.values().map(|b| b.text.as_str()).collect()
    }

    /// Finishes the recording; the duration is at least the last event time.
    pub fn finish(&self, duration_ms: u64) -> SectionRecording {
        SectionRecording {
            schema_version: SCHEMA_VERSION,
            section_id: self.section_id.clone(),
            language: self.language.clone(),
            duration: Timestamp(duration_ms.max(self.clock)),
            audio_ref: BUNDLE_AUDIO.to_owned(),
            notes_source: self.notes.clone(),
            final_code: self.code(),
            transcript: self.transcript.clone(),
            events: self.events.clone(),
        }
    }
}

const REFERENCE_NOTES: &str = "# Summing numbers read from input\n\n\
A program often needs to **read values**, combine them and print a result.\n\
In this section we read whole numbers until an empty line, keep a running\n\
total, and print the *sum* and the *average*.\n\n\
## Key ideas\n\n\
- `input()` returns one line of text, without the trailing newline.\n\
- `int(text)` converts text to a whole number.\n\
- A `while` loop repeats until its condition becomes false.\n\
- Guard against dividing by zero when no numbers were entered.\n\n\
```python\n\
total = 0\n\
count = 0\n\
```\n\n\
Try it: copy the code, change the input and run it again.\n";

const REFERENCE_PROGRAM: &str = "def read_numbers():\n    numbers = []\n    while True:\n        line = input()\n        if not line:\n            break\n        numbers.append(int(line))\n    return numbers\n\n\
nums = read_numbers()\ntotal = sum(nums)\nprint(\"sum:\", total)\nif nums:\n    print(\"avg:\", total / len(nums))\nelse:\n    print(\"no numbers\")\n";

/// A one-minute coding section: the author explains the notes, types a short
/// program keystroke by keystroke, fixes a typo, scrolls, maximizes the code
/// panel and runs the program.
pub fn reference_recording(section_id: &str) -> SectionRecording {
    let mut s = Script::new(section_id, "python").notes(REFERENCE_NOTES);
    s.layout(PanelLayout::default_layout());
    s.wait(800).highlight_notes(crate::model::NOTES_PANE, "read values", 1500);
    s.wait(400).highlight_notes(crate::model::NOTES_PANE, "running\ntotal", 1200);
    s.wait(300).scroll(crate::model::NOTES_PANE, 0.35);
    s.wait(500);
    // Typo and correction on the first line.
    s.type_text(CODE_PANE, "def raed", 90).backspace(CODE_PANE, 3, 120).type_text(CODE_PANE, "ead", 90);
    let rest = &REFERENCE_PROGRAM["def read".len()..];
    let (first, second) = rest.split_at(rest.find("nums = ").unwrap());
    s.type_text(CODE_PANE, first, 55);
    let mut layout = PanelLayout::default_layout();
    for pane in &mut layout.panes {
        pane.maximized = pane.pane_id.as_str() == CODE_PANE;
    }
    s.wait(600).layout(layout);
    s.type_text(CODE_PANE, second, 55);
    s.wait(400).layout(PanelLayout::default_layout());
    s.scroll(CODE_PANE, 0.6).wait(300);
    s.highlight(CODE_PANE, 0, 18, 1200);
    s.wait(500).run("4\n8\n15\n\n", "sum: 27\navg: 9.0\n", "");
    s.wait(900).highlight(crate::model::OUTPUT_PANE, 0, 7, 1000);
    let end = s.now().0.max(60_000);
    let mut cue = 0;
    while cue < end {
        let stop = (cue + 10_000).min(end);
        s.caption(cue, stop, "[narration]");
        cue = stop;
    }
    s.finish(60_000)
}
