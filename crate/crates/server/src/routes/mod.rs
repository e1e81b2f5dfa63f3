mod auth;
mod authoring;
mod playback;
mod practice;

use axum::extract::DefaultBodyLimit;
use axum::routing::{delete, get, post, put};
use axum::{Json, Router};
use serde_json::{json, Value};

use crate::{ApiError, AppState};

/// Audio uploads go through finalize; everything else is small.
const BODY_LIMIT: usize = 64 << 20;

pub(crate) fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/auth/register", post(auth::register))
        .route("/auth/login", post(auth::login))
        .route("/auth/external", post(auth::external))
        .route("/tutorials", post(authoring::create_tutorial).get(authoring::list_tutorials))
        .route("/tutorials/{id}", get(playback::get_tutorial).delete(authoring::delete_tutorial))
        .route("/tutorials/{id}/release", post(authoring::release))
        .route("/tutorials/{id}/order", put(authoring::resequence))
        .route("/tutorials/{id}/quiz", post(authoring::add_quiz))
        .route("/tutorials/{id}/sections/{sid}", delete(authoring::delete_section))
        .route("/tutorials/{id}/sections/{sid}/redo", post(authoring::redo_section))
        .route("/tutorials/{id}/sections/{sid}/bundle", get(playback::bundle))
        .route("/tutorials/{id}/sections/{sid}/audio", get(playback::audio))
        .route("/tutorials/{id}/sections/{sid}/state", get(playback::state))
        .route("/tutorials/{id}/sections/{sid}/copy", get(playback::copy))
        .route("/tutorials/{id}/search", get(playback::search))
        .route("/sessions", post(authoring::begin_session))
        .route("/sessions/{id}", get(authoring::get_session).delete(authoring::discard_session))
        .route("/sessions/{id}/events", post(authoring::append_events))
        .route("/sessions/{id}/finalize", post(authoring::finalize_session))
        .route("/languages", get(practice::languages))
        .route("/execute", post(practice::execute))
        .route("/help", post(practice::help))
        .route("/quiz/{sid}/grade", post(practice::grade))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state)
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok", "api_version": crate::API_VERSION }))
}

/// Runs repository work on the blocking pool.
pub(crate) async fn blocking<T: Send + 'static>(work: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(work).await.map_err(ApiError::internal)?
}
