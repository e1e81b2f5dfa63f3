use axum::extract::{Multipart, Path, Query, State};
use axum::http::StatusCode;
use axum::Json;
use serde::{Deserialize, Serialize};
use tutorcast_core::model::{ActionEvent, Question, QuizSection, RecordingSession, SectionId, SessionId, SessionState, Timestamp, Tutorial, TutorialId};
use tutorcast_recorder::AppendAck;
use tutorcast_store::Role;

use super::blocking;
use crate::{ApiError, AppState, Principal};

#[derive(Debug, Deserialize)]
pub(crate) struct CreateTutorial {
    title: String,
    language: String,
}

#[derive(Debug, Deserialize)]
pub(crate) struct ListQuery {
    /// `released` lists the public catalog for authors too.
    scope: Option<String>,
}

#[derive(Debug, Deserialize)]
pub(crate) struct Resequence {
    section_ids: Vec<SectionId>,
}

#[derive(Debug, Deserialize)]
pub(crate) struct AddQuiz {
    slot: Option<usize>,
    questions: Vec<Question>,
}

#[derive(Debug, Serialize)]
pub(crate) struct SectionCreated {
    section_id: SectionId,
    tutorial: Tutorial,
}

#[derive(Debug, Deserialize)]
pub(crate) struct BeginSession {
    tutorial_id: TutorialId,
    section_slot: usize,
    #[serde(default)]
    language: String,
    #[serde(default)]
    notes_source: String,
}

#[derive(Debug, Deserialize)]
pub(crate) struct Redo {
    #[serde(default)]
    language: String,
    #[serde(default)]
    notes_source: String,
}

#[derive(Debug, Deserialize)]
pub(crate) struct EventBatch {
    events: Vec<ActionEvent>,
}

/// A session without its staged events.
#[derive(Debug, Serialize)]
pub(crate) struct SessionSummary {
    session_id: SessionId,
    tutorial_id: TutorialId,
    section_slot: usize,
    language: String,
    state: SessionState,
    staged_events: usize,
    accepted_through_seq: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    section_id: Option<SectionId>,
}

impl From<RecordingSession> for SessionSummary {
    fn from(s: RecordingSession) -> Self {
        SessionSummary {
            accepted_through_seq: s.staged_events.last().map(|e| e.seq),
            staged_events: s.staged_events.len(),
            session_id: s.session_id,
            tutorial_id: s.tutorial_id,
            section_slot: s.section_slot,
            language: s.language,
            state: s.state,
            section_id: s.section_id,
        }
    }
}

pub(crate) async fn create_tutorial(State(state): State<AppState>, principal: Principal, Json(req): Json<CreateTutorial>) -> Result<(StatusCode, Json<Tutorial>), ApiError> {
    let t = blocking(move || Ok(state.recorder.create_tutorial(&principal.actor(), &req.title, &req.language)?)).await?;
    Ok((StatusCode::CREATED, Json(t)))
}

/// Students see the released catalog; authors see their own tutorials.
pub(crate) async fn list_tutorials(State(state): State<AppState>, principal: Principal, Query(q): Query<ListQuery>) -> Result<Json<Vec<Tutorial>>, ApiError> {
    let released = match q.scope.as_deref() {
        None | Some("own") => principal.role == Role::Student,
        Some("released") => true,
        Some(other) => return Err(ApiError::bad_request(format!("unknown scope {other:?}"))),
    };
    blocking(move || {
        let meta = &state.recorder.repo().meta;
        Ok(Json(if released { meta.list_released()? } else { meta.tutorials_by_owner(&principal.user_id)? }))
    })
    .await
}

pub(crate) async fn delete_tutorial(State(state): State<AppState>, principal: Principal, Path(id): Path<TutorialId>) -> Result<StatusCode, ApiError> {
    blocking(move || Ok(state.recorder.delete_tutorial(&principal.actor(), &id)?)).await?;
    Ok(StatusCode::NO_CONTENT)
}

pub(crate) async fn release(State(state): State<AppState>, principal: Principal, Path(id): Path<TutorialId>) -> Result<Json<Tutorial>, ApiError> {
    blocking(move || Ok(Json(state.recorder.release_tutorial(&principal.actor(), &id)?))).await
}

pub(crate) async fn resequence(State(state): State<AppState>, principal: Principal, Path(id): Path<TutorialId>, Json(req): Json<Resequence>) -> Result<Json<Tutorial>, ApiError> {
    blocking(move || Ok(Json(state.recorder.resequence_sections(&principal.actor(), &id, &req.section_ids)?))).await
}

pub(crate) async fn add_quiz(State(state): State<AppState>, principal: Principal, Path(id): Path<TutorialId>, Json(req): Json<AddQuiz>) -> Result<(StatusCode, Json<SectionCreated>), ApiError> {
    let created = blocking(move || {
        // The recorder assigns the real id.
        let quiz = QuizSection { section_id: SectionId::new("pending"), questions: req.questions };
        let (tutorial, section_id) = state.recorder.add_quiz_section(&principal.actor(), &id, req.slot, &quiz)?;
        Ok(SectionCreated { section_id, tutorial })
    })
    .await?;
    Ok((StatusCode::CREATED, Json(created)))
}

pub(crate) async fn delete_section(State(state): State<AppState>, principal: Principal, Path((id, sid)): Path<(TutorialId, SectionId)>) -> Result<Json<Tutorial>, ApiError> {
    blocking(move || Ok(Json(state.recorder.delete_section(&principal.actor(), &id, &sid)?))).await
}

pub(crate) async fn redo_section(
    State(state): State<AppState>,
    principal: Principal,
    Path((id, sid)): Path<(TutorialId, SectionId)>,
    Json(req): Json<Redo>,
) -> Result<(StatusCode, Json<SessionSummary>), ApiError> {
    let s = blocking(move || Ok(state.recorder.redo_section(&principal.actor(), &id, &sid, &req.language, &req.notes_source)?)).await?;
    Ok((StatusCode::CREATED, Json(s.into())))
}

pub(crate) async fn begin_session(State(state): State<AppState>, principal: Principal, Json(req): Json<BeginSession>) -> Result<(StatusCode, Json<SessionSummary>), ApiError> {
    let s = blocking(move || Ok(state.recorder.begin_session(&principal.actor(), &req.tutorial_id, req.section_slot, &req.language, &req.notes_source)?)).await?;
    Ok((StatusCode::CREATED, Json(s.into())))
}

pub(crate) async fn get_session(State(state): State<AppState>, principal: Principal, Path(id): Path<SessionId>) -> Result<Json<SessionSummary>, ApiError> {
    blocking(move || Ok(Json(state.recorder.session(&principal.actor(), &id)?.into()))).await
}

pub(crate) async fn discard_session(State(state): State<AppState>, principal: Principal, Path(id): Path<SessionId>) -> Result<StatusCode, ApiError> {
    blocking(move || Ok(state.recorder.discard_session(&principal.actor(), &id)?)).await?;
    Ok(StatusCode::NO_CONTENT)
}

pub(crate) async fn append_events(State(state): State<AppState>, principal: Principal, Path(id): Path<SessionId>, Json(batch): Json<EventBatch>) -> Result<Json<AppendAck>, ApiError> {
    blocking(move || Ok(Json(state.recorder.append_events(&principal.actor(), &id, &batch.events)?))).await
}

/// Multipart form: `audio` (file bytes) and `duration_ms`.
pub(crate) async fn finalize_session(State(state): State<AppState>, principal: Principal, Path(id): Path<SessionId>, mut form: Multipart) -> Result<(StatusCode, Json<SectionCreated>), ApiError> {
    let bad = |e: axum::extract::multipart::MultipartError| ApiError::bad_request(e.body_text());
    let mut audio = None;
    let mut duration = None;
    while let Some(field) = form.next_field().await.map_err(bad)? {
        match field.name() {
            Some("audio") => audio = Some(field.bytes().await.map_err(bad)?),
            Some("duration_ms") => {
                let text = field.text().await.map_err(bad)?;
                duration = Some(text.trim().parse::<u64>().map_err(|_| ApiError::bad_request(format!("duration_ms: not a number: {text:?}")))?);
            }
            _ => {}
        }
    }
    let audio = audio.ok_or_else(|| ApiError::bad_request("missing audio part"))?;
    let duration = duration.ok_or_else(|| ApiError::bad_request("missing duration_ms part"))?;
    let created = blocking(move || {
        let actor = principal.actor();
        let section = state.recorder.finalize_session(&actor, &id, &audio, Timestamp(duration))?;
        let tutorial_id = state.recorder.session(&actor, &id)?.tutorial_id;
        Ok(SectionCreated { section_id: section.section_id, tutorial: state.recorder.tutorial(&tutorial_id)? })
    })
    .await?;
    Ok((StatusCode::CREATED, Json(created)))
}
