use axum::extract::{Path, State};
use axum::Json;
use serde::{Deserialize, Serialize};
use tutorcast_core::help::{contextual_help, HelpQuery};
use tutorcast_core::model::{SectionId, SectionKind};
use tutorcast_core::quiz::{grade_quiz, QuizGrade};
use tutorcast_exec::{ExecutionResult, Limits};

use super::blocking;
use super::playback::readable;
use crate::{ApiError, AppState, Principal};

#[derive(Debug, Default, Deserialize)]
pub(crate) struct LimitOverrides {
    time_ms: Option<u64>,
    memory_bytes: Option<u64>,
    output_bytes: Option<usize>,
}

#[derive(Debug, Deserialize)]
pub(crate) struct ExecuteRequest {
    language_id: String,
    source: String,
    #[serde(default)]
    stdin: String,
    #[serde(default)]
    limits: Option<LimitOverrides>,
}

pub(crate) async fn execute(State(state): State<AppState>, _principal: Principal, Json(req): Json<ExecuteRequest>) -> Result<Json<ExecutionResult>, ApiError> {
    let limits = req.limits.map(|o| {
        let d = state.executor.config().default_limits;
        Limits { time_ms: o.time_ms.unwrap_or(d.time_ms), memory_bytes: o.memory_bytes.unwrap_or(d.memory_bytes), output_bytes: o.output_bytes.unwrap_or(d.output_bytes) }
    });
    Ok(Json(state.executor.execute(&req.language_id, &req.source, &req.stdin, limits).await?))
}

#[derive(Debug, Serialize)]
pub(crate) struct LanguageInfo {
    language_id: String,
    compiled: bool,
    available: bool,
}

pub(crate) async fn languages(State(state): State<AppState>, _principal: Principal) -> Json<Vec<LanguageInfo>> {
    Json(
        state
            .executor
            .registry()
            .list()
            .iter()
            .map(|p| LanguageInfo { language_id: p.language_id.clone(), compiled: p.compile.is_some(), available: p.toolchain_available() })
            .collect(),
    )
}

#[derive(Debug, Deserialize)]
pub(crate) struct HelpRequest {
    error_text: String,
    language_id: String,
}

pub(crate) async fn help(State(state): State<AppState>, _principal: Principal, Json(req): Json<HelpRequest>) -> Result<Json<HelpQuery>, ApiError> {
    blocking(move || Ok(Json(contextual_help(&req.error_text, &req.language_id, state.help.as_ref())?))).await
}

#[derive(Debug, Deserialize)]
pub(crate) struct GradeRequest {
    answers: Vec<usize>,
}

pub(crate) async fn grade(State(state): State<AppState>, principal: Principal, Path(sid): Path<SectionId>, Json(req): Json<GradeRequest>) -> Result<Json<QuizGrade>, ApiError> {
    blocking(move || {
        let missing = || ApiError::not_found(format!("quiz {sid} not found"));
        let record = state.recorder.repo().meta.section(&sid)?.filter(|r| r.kind == SectionKind::Quiz).ok_or_else(missing)?;
        let tutorial = readable(&state, &principal, &record.tutorial_id).map_err(|_| missing())?;
        tutorial.section_index(&sid).ok_or_else(missing)?;
        let quiz = state.recorder.repo().load_quiz_bundle(&sid)?;
        Ok(Json(grade_quiz(&quiz, &req.answers)?))
    })
    .await
}
