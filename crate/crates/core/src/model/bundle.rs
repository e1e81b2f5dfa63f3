//! On-disk bundle layout: one directory per section.
//!
//! Coding sections: `manifest.json`, `actions.json`, `notes.md`, `code.json`,
//! `transcript.vtt` and `audio.mp3`. Quiz sections: `manifest.json` and
//! `quiz.json`. The audio bytes are opaque and written by the store.

use serde::{Deserialize, Serialize};

use super::codec::{check_schema, CodecError};
use super::{render_vtt, validate_section, ActionEvent, Cue, QuizSection, SectionId, SectionRecording, Timestamp, SCHEMA_VERSION};

pub const BUNDLE_MANIFEST: &str = "manifest.json";
pub const BUNDLE_ACTIONS: &str = "actions.json";
pub const BUNDLE_NOTES: &str = "notes.md";
pub const BUNDLE_CODE: &str = "code.json";
pub const BUNDLE_QUIZ: &str = "quiz.json";
pub const BUNDLE_AUDIO: &str = "audio.mp3";
pub const BUNDLE_TRANSCRIPT: &str = "transcript.vtt";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionKind {
    Coding,
    Quiz,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BundleFile {
    pub path: &'static str,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub schema_version: u32,
    pub section_id: SectionId,
    pub kind: SectionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<Timestamp>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transcript: Vec<Cue>,
}

#[derive(Serialize, Deserialize)]
struct CodeFile {
    language: String,
    final_code: String,
}

fn json_file<T: Serialize>(path: &'static str, value: &T) -> Result<BundleFile, CodecError> {
    Ok(BundleFile { path, bytes: serde_json::to_vec(value)? })
}

/// Text artifacts of a coding section, in layout order. Rejects invalid sections.
pub fn render_coding_bundle(section: &SectionRecording) -> Result<Vec<BundleFile>, CodecError> {
    let report = validate_section(section);
    if !report.is_valid() {
        return Err(CodecError::Invalid(report));
    }
    let manifest = BundleManifest {
        schema_version: section.schema_version,
        section_id: section.section_id.clone(),
        kind: SectionKind::Coding,
        language: Some(section.language.clone()),
        duration: Some(section.duration),
        audio_ref: Some(section.audio_ref.clone()),
        transcript: section.transcript.clone(),
    };
    Ok(vec![
        json_file(BUNDLE_MANIFEST, &manifest)?,
        json_file(BUNDLE_ACTIONS, &section.events)?,
        BundleFile { path: BUNDLE_NOTES, bytes: section.notes_source.clone().into_bytes() },
        json_file(BUNDLE_CODE, &CodeFile { language: section.language.clone(), final_code: section.final_code.clone() })?,
        BundleFile { path: BUNDLE_TRANSCRIPT, bytes: render_vtt(&section.transcript).into_bytes() },
    ])
}

pub fn render_quiz_bundle(quiz: &QuizSection) -> Result<Vec<BundleFile>, CodecError> {
    let manifest = BundleManifest {
        schema_version: SCHEMA_VERSION,
        section_id: quiz.section_id.clone(),
        kind: SectionKind::Quiz,
        language: None,
        duration: None,
        audio_ref: None,
        transcript: Vec::new(),
    };
    Ok(vec![json_file(BUNDLE_MANIFEST, &manifest)?, json_file(BUNDLE_QUIZ, quiz)?])
}

fn find<'a>(files: &'a [BundleFile], path: &'static str) -> Result<&'a [u8], CodecError> {
    files
        .iter()
        .find(|f| f.path == path)
        .map(|f| f.bytes.as_slice())
        .ok_or(CodecError::MissingFile(path))
}

fn manifest(files: &[BundleFile], kind: SectionKind) -> Result<BundleManifest, CodecError> {
    let bytes = find(files, BUNDLE_MANIFEST)?;
    check_schema(bytes)?;
    let manifest: BundleManifest = serde_json::from_slice(bytes)?;
    if manifest.kind != kind {
        return Err(CodecError::WrongKind { expected: kind, found: manifest.kind });
    }
    Ok(manifest)
}

pub fn parse_coding_bundle(files: &[BundleFile]) -> Result<SectionRecording, CodecError> {
    let manifest = manifest(files, SectionKind::Coding)?;
    let events: Vec<ActionEvent> = serde_json::from_slice(find(files, BUNDLE_ACTIONS)?)?;
    let notes = String::from_utf8(find(files, BUNDLE_NOTES)?.to_vec()).map_err(|_| CodecError::NotUtf8(BUNDLE_NOTES))?;
    let code: CodeFile = serde_json::from_slice(find(files, BUNDLE_CODE)?)?;
    Ok(SectionRecording {
        schema_version: manifest.schema_version,
        section_id: manifest.section_id,
        language: code.language,
        duration: manifest.duration.unwrap_or_default(),
        audio_ref: manifest.audio_ref.unwrap_or_else(|| BUNDLE_AUDIO.to_owned()),
        notes_source: notes,
        final_code: code.final_code,
        transcript: manifest.transcript,
        events,
    })
}

pub fn parse_quiz_bundle(files: &[BundleFile]) -> Result<QuizSection, CodecError> {
    manifest(files, SectionKind::Quiz)?;
    Ok(serde_json::from_slice(find(files, BUNDLE_QUIZ)?)?)
}
