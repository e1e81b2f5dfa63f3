//! Client-side playback for the browser: a section bundle is replayed
//! locally, searched, and runtime errors are turned into help queries,
//! all without a round trip to the service.
//!
//! The Rust API below is what the page uses through wasm-bindgen; native
//! builds use the same types directly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use tutorcast_core::help::normalize_error;
use tutorcast_core::model::{parse_coding_bundle, render_coding_bundle, BundleFile, BUNDLE_ACTIONS, BUNDLE_CODE, BUNDLE_MANIFEST, BUNDLE_NOTES, BUNDLE_QUIZ, BUNDLE_TRANSCRIPT};
use tutorcast_core::replay::DEFAULT_SNAPSHOT_INTERVAL_MS;
use tutorcast_core::search::{SectionContent, TimelineHit, TutorialIndex};
use tutorcast_core::{build_snapshot_index, state_at, PlaybackState, SectionRecording, SnapshotIndex, Timestamp};
use wasm_bindgen::prelude::*;

const KNOWN_FILES: [&str; 6] = [BUNDLE_MANIFEST, BUNDLE_ACTIONS, BUNDLE_NOTES, BUNDLE_CODE, BUNDLE_TRANSCRIPT, BUNDLE_QUIZ];

/// Body of `GET .../bundle`, or just its `files` map.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum BundleBody {
    Response { files: BTreeMap<String, String> },
    Files(BTreeMap<String, String>),
}

/// Same shape as the service's `GET .../state` reply.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateView {
    pub playhead: Timestamp,
    pub code: String,
    pub state: PlaybackState,
}

fn js_err(err: impl std::fmt::Display) -> JsError {
    JsError::new(&err.to_string())
}

#[wasm_bindgen]
pub struct Player {
    section: SectionRecording,
    index: SnapshotIndex,
    search: TutorialIndex,
}

impl Player {
    pub fn from_section(section: SectionRecording) -> Result<Player, String> {
        let index = build_snapshot_index(&section, DEFAULT_SNAPSHOT_INTERVAL_MS).map_err(|e| e.to_string())?;
        let search = TutorialIndex::build(vec![SectionContent::Coding(section.clone())]);
        Ok(Player { section, index, search })
    }

    /// Accepts the bundle route's JSON body or a bare `{file name: text}` map.
    pub fn from_bundle(json: &str) -> Result<Player, String> {
        let files = match serde_json::from_str::<BundleBody>(json).map_err(|e| format!("bundle JSON: {e}"))? {
            BundleBody::Response { files } | BundleBody::Files(files) => files,
        };
        let mut parsed = Vec::new();
        for (name, text) in files {
            let path = KNOWN_FILES.iter().find(|k| **k == name).ok_or_else(|| format!("unexpected bundle file {name}"))?;
            parsed.push(BundleFile { path, bytes: text.into_bytes() });
        }
        let section = parse_coding_bundle(&parsed).map_err(|e| e.to_string())?;
        Player::from_section(section)
    }

    pub fn section(&self) -> &SectionRecording {
        &self.section
    }

    pub fn view(&self, t_ms: u64) -> Result<StateView, String> {
        let state = state_at(&self.section, Timestamp(t_ms), Some(&self.index)).map_err(|e| e.to_string())?;
        Ok(StateView { playhead: state.playhead, code: state.code(), state })
    }

    pub fn hits(&self, keywords: &str) -> Result<Vec<TimelineHit>, String> {
        self.search.search(keywords).map_err(|e| e.to_string())
    }
}

#[wasm_bindgen]
impl Player {
    /// Parses a bundle and indexes it for seeking and search.
    #[wasm_bindgen(constructor)]
    pub fn new(bundle_json: &str) -> Result<Player, JsError> {
        Player::from_bundle(bundle_json).map_err(js_err)
    }

    /// The bundled reference section, for trying the page without a server.
    pub fn demo() -> Player {
        Player::from_section(tutorcast_core::script::reference_recording("demo")).expect("reference recording is valid")
    }

    #[wasm_bindgen(getter)]
    pub fn duration_ms(&self) -> f64 {
        self.section.duration.0 as f64
    }

    #[wasm_bindgen(getter)]
    pub fn language(&self) -> String {
        self.section.language.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn notes(&self) -> String {
        self.section.notes_source.clone()
    }

    /// Playback state at `t_ms` as JSON: `{playhead, code, state}`.
    pub fn state_json(&self, t_ms: f64) -> Result<String, JsError> {
        let view = self.view(t_ms.max(0.0) as u64).map_err(js_err)?;
        serde_json::to_string(&view).map_err(js_err)
    }

    /// Code visible at `t_ms`, for the practice panel.
    pub fn copy_code(&self, t_ms: f64) -> Result<String, JsError> {
        Ok(self.view(t_ms.max(0.0) as u64).map_err(js_err)?.code)
    }

    /// Timeline hits as a JSON array.
    pub fn search(&self, keywords: &str) -> Result<String, JsError> {
        let hits = self.hits(keywords).map_err(js_err)?;
        serde_json::to_string(&hits).map_err(js_err)
    }

    /// Bundle files of the loaded section as a `{name: text}` JSON map.
    pub fn bundle_json(&self) -> Result<String, JsError> {
        let files = render_coding_bundle(&self.section).map_err(js_err)?;
        let map: BTreeMap<&str, String> = files.into_iter().map(|f| (f.path, String::from_utf8(f.bytes).expect("text artifact"))).collect();
        serde_json::to_string(&map).map_err(js_err)
    }
}

/// Error text with paths, positions, addresses and e-mails removed.
#[wasm_bindgen(js_name = normalizeError)]
pub fn normalize_error_text(text: &str) -> String {
    normalize_error(text)
}
