use std::fmt::Write as _;

use serde::Deserialize;
use thiserror::Error;

use super::{validate_section, Cue, SectionKind, SectionRecording, ValidationReport, SCHEMA_VERSION};

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("section is invalid: {0}")]
    Invalid(ValidationReport),
    #[error("unsupported schema version {found} (this build reads {SCHEMA_VERSION})")]
    UnsupportedSchema { found: u32 },
    #[error("malformed document: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("bundle is missing {0}")]
    MissingFile(&'static str),
    #[error("{0} is not valid UTF-8")]
    NotUtf8(&'static str),
    #[error("expected a {expected:?} bundle, found {found:?}")]
    WrongKind { expected: SectionKind, found: SectionKind },
}

#[derive(Deserialize)]
struct VersionProbe {
    schema_version: u32,
}

/// Canonical single-document encoding: compact JSON with fixed field order.
pub fn serialize_section(section: &SectionRecording) -> Result<Vec<u8>, CodecError> {
    let report = validate_section(section);
    if !report.is_valid() {
        return Err(CodecError::Invalid(report));
    }
    Ok(serde_json::to_vec(section)?)
}

pub fn deserialize_section(bytes: &[u8]) -> Result<SectionRecording, CodecError> {
    check_schema(bytes)?;
    Ok(serde_json::from_slice(bytes)?)
}

pub(crate) fn check_schema(bytes: &[u8]) -> Result<(), CodecError> {
    let probe: VersionProbe = serde_json::from_slice(bytes)?;
    if probe.schema_version != SCHEMA_VERSION {
        return Err(CodecError::UnsupportedSchema { found: probe.schema_version });
    }
    Ok(())
}

fn vtt_time(out: &mut String, ms: u64) {
    let (h, rem) = (ms / 3_600_000, ms % 3_600_000);
    let (m, rem) = (rem / 60_000, rem % 60_000);
    let (s, millis) = (rem / 1000, rem % 1000);
    let _ = write!(out, "{h:02}:{m:02}:{s:02}.{millis:03}");
}

/// WebVTT subtitle export of the transcript cues.
pub fn render_vtt(cues: &[Cue]) -> String {
    let mut out = String::from("WEBVTT\n");
    for (i, cue) in cues.iter().enumerate() {
        let _ = write!(out, "\n{}\n", i + 1);
        vtt_time(&mut out, cue.start.0);
        out.push_str(" --> ");
        vtt_time(&mut out, cue.end.0);
        out.push('\n');
        // A blank line would terminate the cue early.
        for line in cue.text.lines().filter(|l| !l.trim().is_empty()) {
            out.push_str(line);
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ActionEvent, CodeEdit, Position, Timestamp};

    #[test]
    fn empty_section_is_minimal() {
        let s = SectionRecording::empty("s1", "python", Timestamp(0));
        let bytes = serialize_section(&s).unwrap();
        assert_eq!(
            std::str::from_utf8(&bytes).unwrap(),
            r#"{"schema_version":1,"section_id":"s1","language":"python","duration":0,"audio_ref":"audio.mp3","notes_source":"","final_code":"","transcript":[],"events":[]}"#
        );
        assert_eq!(deserialize_section(&bytes).unwrap(), s);
    }

    #[test]
    fn single_insert_document() {
        let mut s = SectionRecording::empty("s1", "python", Timestamp(1000));
        s.events.push(ActionEvent::new(0, Timestamp(0), CodeEdit::insert("code", Position::new(0, 0), "print('hi')")));
        s.final_code = "print('hi')".into();
        let bytes = serialize_section(&s).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.ends_with(r#""events":[[0,0,"i","code",0,0,"print('hi')"]]}"#), "{text}");
        assert_eq!(deserialize_section(&bytes).unwrap(), s);
    }

    #[test]
    fn invalid_section_is_not_serialized() {
        let mut s = SectionRecording::empty("s1", "python", Timestamp(0));
        s.final_code = "stale".into();
        assert!(matches!(serialize_section(&s), Err(CodecError::Invalid(_))));
    }

    #[test]
    fn unknown_schema_rejected() {
        let doc = br#"{"schema_version":2,"section_id":"s1"}"#;
        assert!(matches!(deserialize_section(doc), Err(CodecError::UnsupportedSchema { found: 2 })));
    }

    #[test]
    fn vtt_format() {
        let cues = vec![
            Cue { start: Timestamp(0), end: Timestamp(10_000), text: "hello".into() },
            Cue { start: Timestamp(10_000), end: Timestamp(3_725_042), text: "two\n\nlines".into() },
        ];
        assert_eq!(
            render_vtt(&cues),
            "WEBVTT\n\n1\n00:00:00.000 --> 00:00:10.000\nhello\n\n2\n00:00:10.000 --> 01:02:05.042\ntwo\nlines\n"
        );
    }
}
