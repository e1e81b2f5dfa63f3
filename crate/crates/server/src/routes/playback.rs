use std::collections::BTreeMap;

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tutorcast_core::model::{SectionId, SectionKind, Timestamp, Tutorial, TutorialId, BUNDLE_AUDIO};
use tutorcast_core::replay::{build_snapshot_index, copy_code_at, state_at, CodeCopy, PlaybackState, DEFAULT_SNAPSHOT_INTERVAL_MS};
use tutorcast_core::search::{SectionContent, TimelineHit, TutorialIndex};
use tutorcast_store::{ArtifactRef, SectionRecord};

use super::blocking;
use crate::{ApiError, AppState, Principal};

/// Bundles never change once written, so clients may keep them.
const BUNDLE_CACHE_CONTROL: &str = "private, max-age=86400";

/// The tutorial if the principal may play it: released, or their own.
pub(crate) fn readable(state: &AppState, principal: &Principal, id: &TutorialId) -> Result<Tutorial, ApiError> {
    let hidden = || ApiError::not_found(format!("tutorial {id} not found"));
    let tutorial = state.recorder.repo().meta.tutorial(id)?.ok_or_else(hidden)?;
    if tutorial.is_released() || tutorial.owner == principal.user_id {
        Ok(tutorial)
    } else {
        Err(hidden())
    }
}

fn readable_section(state: &AppState, principal: &Principal, id: &TutorialId, sid: &SectionId) -> Result<(Tutorial, SectionRecord), ApiError> {
    let tutorial = readable(state, principal, id)?;
    let missing = || ApiError::not_found(format!("section {sid} not found in tutorial {id}"));
    tutorial.section_index(sid).ok_or_else(missing)?;
    let record = state.recorder.repo().meta.section(sid)?.filter(|r| &r.tutorial_id == id).ok_or_else(missing)?;
    Ok((tutorial, record))
}

pub(crate) async fn get_tutorial(State(state): State<AppState>, principal: Principal, Path(id): Path<TutorialId>) -> Result<Json<Tutorial>, ApiError> {
    blocking(move || Ok(Json(readable(&state, &principal, &id)?))).await
}

#[derive(Debug, Serialize)]
pub(crate) struct BundleResponse {
    api_version: u32,
    tutorial_id: TutorialId,
    section_id: SectionId,
    kind: SectionKind,
    /// Text artifacts by file name, hash-verified.
    files: BTreeMap<String, String>,
    artifacts: Vec<ArtifactRef>,
    #[serde(skip_serializing_if = "Option::is_none")]
    audio_url: Option<String>,
}

fn etag(record: &SectionRecord) -> String {
    let mut h = Sha256::new();
    h.update(record.bundle_id.as_str());
    for a in &record.artifacts {
        h.update(b"\0");
        h.update(&a.relative_path);
        h.update(b"\0");
        h.update(&a.content_hash);
    }
    format!("\"{}\"", hex::encode(&h.finalize()[..16]))
}

fn not_modified(headers: &HeaderMap, tag: &str) -> bool {
    headers
        .get(header::IF_NONE_MATCH)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.split(',').any(|t| t.trim() == tag || t.trim() == "*"))
}

fn cached(tag: String, body: impl IntoResponse) -> Response {
    let mut response = body.into_response();
    let headers = response.headers_mut();
    headers.insert(header::ETAG, HeaderValue::from_str(&tag).expect("hex etag"));
    headers.insert(header::CACHE_CONTROL, HeaderValue::from_static(BUNDLE_CACHE_CONTROL));
    response
}

/// Every non-audio artifact of a section, for client-side replay.
pub(crate) async fn bundle(State(state): State<AppState>, principal: Principal, Path((id, sid)): Path<(TutorialId, SectionId)>, headers: HeaderMap) -> Result<Response, ApiError> {
    blocking(move || {
        let (_, record) = readable_section(&state, &principal, &id, &sid)?;
        let tag = etag(&record);
        if not_modified(&headers, &tag) {
            return Ok(cached(tag, StatusCode::NOT_MODIFIED));
        }
        let mut files = BTreeMap::new();
        for artifact in record.artifacts.iter().filter(|a| a.relative_path != BUNDLE_AUDIO) {
            let bytes = state.recorder.repo().read_verified(&record, &artifact.relative_path)?;
            let text = String::from_utf8(bytes).map_err(|_| ApiError::internal(format!("{} is not UTF-8", artifact.relative_path)))?;
            files.insert(artifact.relative_path.clone(), text);
        }
        let audio_url = record.artifact(BUNDLE_AUDIO).map(|_| format!("/tutorials/{id}/sections/{sid}/audio"));
        let body = BundleResponse { api_version: crate::API_VERSION, tutorial_id: id, section_id: sid, kind: record.kind, artifacts: record.artifacts.clone(), files, audio_url };
        Ok(cached(tag, Json(body)))
    })
    .await
}

pub(crate) async fn audio(State(state): State<AppState>, principal: Principal, Path((id, sid)): Path<(TutorialId, SectionId)>, headers: HeaderMap) -> Result<Response, ApiError> {
    blocking(move || {
        let (_, record) = readable_section(&state, &principal, &id, &sid)?;
        let artifact = record.artifact(BUNDLE_AUDIO).ok_or_else(|| ApiError::not_found(format!("section {sid} has no audio")))?;
        let tag = format!("\"{}\"", artifact.content_hash);
        if not_modified(&headers, &tag) {
            return Ok(cached(tag, StatusCode::NOT_MODIFIED));
        }
        let bytes = state.recorder.repo().read_verified(&record, BUNDLE_AUDIO)?;
        Ok(cached(tag, ([(header::CONTENT_TYPE, "audio/mpeg")], bytes)))
    })
    .await
}

#[derive(Debug, Deserialize)]
pub(crate) struct AtQuery {
    t: u64,
}

#[derive(Debug, Serialize)]
pub(crate) struct StateResponse {
    playhead: Timestamp,
    code: String,
    state: PlaybackState,
}

fn coding_section(state: &AppState, record: &SectionRecord) -> Result<tutorcast_core::SectionRecording, ApiError> {
    if record.kind != SectionKind::Coding {
        return Err(ApiError::bad_request(format!("section {} is a quiz", record.section_id)));
    }
    Ok(state.recorder.repo().load_coding_bundle(&record.section_id)?.0)
}

/// Server-side replay, for thin clients and tests.
pub(crate) async fn state(State(app): State<AppState>, principal: Principal, Path((id, sid)): Path<(TutorialId, SectionId)>, Query(q): Query<AtQuery>) -> Result<Json<StateResponse>, ApiError> {
    blocking(move || {
        let (_, record) = readable_section(&app, &principal, &id, &sid)?;
        let section = coding_section(&app, &record)?;
        let index = build_snapshot_index(&section, DEFAULT_SNAPSHOT_INTERVAL_MS)?;
        let state = state_at(&section, Timestamp(q.t), Some(&index))?;
        Ok(Json(StateResponse { playhead: state.playhead, code: state.code(), state }))
    })
    .await
}

pub(crate) async fn copy(State(app): State<AppState>, principal: Principal, Path((id, sid)): Path<(TutorialId, SectionId)>, Query(q): Query<AtQuery>) -> Result<Json<CodeCopy>, ApiError> {
    blocking(move || {
        let (_, record) = readable_section(&app, &principal, &id, &sid)?;
        let section = coding_section(&app, &record)?;
        Ok(Json(copy_code_at(&section, Timestamp(q.t), None)?))
    })
    .await
}

#[derive(Debug, Deserialize)]
pub(crate) struct SearchQuery {
    q: String,
}

/// Loads every section of a tutorial, in tutorial order.
pub(crate) fn load_contents(state: &AppState, tutorial: &Tutorial) -> Result<Vec<SectionContent>, ApiError> {
    let repo = state.recorder.repo();
    tutorial
        .sections
        .iter()
        .map(|s| {
            Ok(match s.kind {
                SectionKind::Coding => SectionContent::Coding(repo.load_coding_bundle(&s.id)?.0),
                SectionKind::Quiz => SectionContent::Quiz(repo.load_quiz_bundle(&s.id)?),
            })
        })
        .collect()
}

pub(crate) async fn search(State(state): State<AppState>, principal: Principal, Path(id): Path<TutorialId>, Query(q): Query<SearchQuery>) -> Result<Json<Vec<TimelineHit>>, ApiError> {
    blocking(move || {
        let tutorial = readable(&state, &principal, &id)?;
        let index = TutorialIndex::build(load_contents(&state, &tutorial)?);
        Ok(Json(index.search(&q.q)?))
    })
    .await
}
