use axum::extract::State;
use axum::http::StatusCode;
use axum::Json;
use serde::{Deserialize, Serialize};
use tutorcast_core::model::UserId;
use tutorcast_store::{Role, UserRecord};

use super::blocking;
use crate::auth::{hash_password, now_ms, verify_password, AuthProvider};
use crate::{ApiError, AppState};

#[derive(Debug, Deserialize)]
pub(crate) struct RegisterRequest {
    username: String,
    password: String,
    role: Role,
}

#[derive(Debug, Deserialize)]
pub(crate) struct LoginRequest {
    username: String,
    password: String,
}

#[derive(Debug, Deserialize)]
pub(crate) struct ExternalRequest {
    provider_token: String,
}

#[derive(Debug, Serialize)]
pub(crate) struct TokenResponse {
    token: String,
    user_id: UserId,
    role: Role,
    auth_provider: AuthProvider,
}

fn token_for(state: &AppState, user: &UserRecord, provider: AuthProvider) -> TokenResponse {
    TokenResponse { token: state.tokens.issue(&user.user_id, user.role, provider, now_ms()), user_id: user.user_id.clone(), role: user.role, auth_provider: provider }
}

fn new_user_id() -> UserId {
    UserId(format!("usr_{}", uuid::Uuid::new_v4().simple()))
}

pub(crate) async fn register(State(state): State<AppState>, Json(req): Json<RegisterRequest>) -> Result<(StatusCode, Json<TokenResponse>), ApiError> {
    let name_ok = (3..=64).contains(&req.username.chars().count()) && req.username.chars().all(|c| c.is_alphanumeric() || "._-@+".contains(c));
    if !name_ok {
        return Err(ApiError::bad_request("username must be 3-64 letters, digits or ._-@+"));
    }
    if req.password.chars().count() < 8 {
        return Err(ApiError::bad_request("password must have at least 8 characters"));
    }
    let st = state.clone();
    let user = blocking(move || {
        let user = UserRecord { user_id: new_user_id(), username: req.username, role: req.role, password_hash: hash_password(&req.password, st.password_rounds), external_subject: None };
        st.recorder.repo().meta.insert_user(&user)?;
        Ok(user)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(token_for(&state, &user, AuthProvider::Local))))
}

pub(crate) async fn login(State(state): State<AppState>, Json(req): Json<LoginRequest>) -> Result<Json<TokenResponse>, ApiError> {
    let st = state.clone();
    let user = blocking(move || {
        let user = st.recorder.repo().meta.user_by_name(&req.username)?;
        match user {
            Some(u) if !u.password_hash.is_empty() && verify_password(&req.password, &u.password_hash) => Ok(u),
            _ => Err(ApiError::unauthenticated("unknown user or wrong password")),
        }
    })
    .await?;
    Ok(Json(token_for(&state, &user, AuthProvider::Local)))
}

/// Signs in with an outside provider's token. First sight of a subject
/// creates the account with the role the provider asserted.
pub(crate) async fn external(State(state): State<AppState>, Json(req): Json<ExternalRequest>) -> Result<Json<TokenResponse>, ApiError> {
    let st = state.clone();
    let user = blocking(move || {
        let identity = st.external.verify(&req.provider_token)?;
        let meta = &st.recorder.repo().meta;
        let username = format!("ext:{}", identity.subject);
        if let Some(user) = meta.user_by_name(&username)? {
            return Ok(user);
        }
        let user = UserRecord { user_id: new_user_id(), username: username.clone(), role: identity.role, password_hash: String::new(), external_subject: Some(identity.subject) };
        match meta.insert_user(&user) {
            Ok(()) => Ok(user),
            // Lost a race with a concurrent first sign-in.
            Err(tutorcast_store::StoreError::AlreadyExists { .. }) => meta.user_by_name(&username)?.ok_or_else(|| ApiError::internal("user vanished")),
            Err(err) => Err(err.into()),
        }
    })
    .await?;
    Ok(Json(token_for(&state, &user, AuthProvider::External)))
}
