//! Password hashing, signed bearer tokens and the external sign-in seam.

use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::FromRequestParts;
use axum::http::request::Parts;
use base64::engine::general_purpose::{STANDARD_NO_PAD, URL_SAFE_NO_PAD};
use base64::Engine;
use hmac::{Hmac, Mac};
use serde::{Deserialize, Serialize};
use sha2::Sha256;
use tutorcast_core::model::UserId;
use tutorcast_recorder::Actor;
use tutorcast_store::Role;

use crate::{ApiError, AppState};

type HmacSha256 = Hmac<Sha256>;

pub const DEFAULT_TOKEN_TTL_MS: u64 = 24 * 60 * 60 * 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuthProvider {
    Local,
    External,
}

/// The authenticated caller, decoded from the bearer token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Principal {
    pub user_id: UserId,
    pub role: Role,
    pub auth_provider: AuthProvider,
}

impl Principal {
    pub fn actor(&self) -> Actor {
        Actor { user_id: self.user_id.clone(), role: self.role }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claims {
    pub sub: UserId,
    pub role: Role,
    pub provider: AuthProvider,
    /// Expiry, epoch milliseconds.
    pub exp: u64,
}

pub(crate) fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

/// HMAC-SHA256 over the base64url claims: `<claims>.<mac>`.
#[derive(Clone)]
pub struct TokenSigner {
    key: Vec<u8>,
    ttl_ms: u64,
}

impl std::fmt::Debug for TokenSigner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TokenSigner").field("ttl_ms", &self.ttl_ms).finish_non_exhaustive()
    }
}

impl TokenSigner {
    pub fn new(key: Vec<u8>, ttl_ms: u64) -> Self {
        TokenSigner { key, ttl_ms }
    }

    fn mac(&self) -> HmacSha256 {
        HmacSha256::new_from_slice(&self.key).expect("HMAC accepts any key length")
    }

    pub fn issue(&self, user_id: &UserId, role: Role, provider: AuthProvider, now_ms: u64) -> String {
        let claims = Claims { sub: user_id.clone(), role, provider, exp: now_ms + self.ttl_ms };
        let body = URL_SAFE_NO_PAD.encode(serde_json::to_vec(&claims).expect("claims serialize"));
        let mut mac = self.mac();
        mac.update(body.as_bytes());
        format!("{body}.{}", URL_SAFE_NO_PAD.encode(mac.finalize().into_bytes()))
    }

    pub fn verify(&self, token: &str, now_ms: u64) -> Result<Claims, ApiError> {
        let bad = || ApiError::unauthenticated("invalid token");
        let (body, sig) = token.split_once('.').ok_or_else(bad)?;
        let sig = URL_SAFE_NO_PAD.decode(sig).map_err(|_| bad())?;
        let mut mac = self.mac();
        mac.update(body.as_bytes());
        mac.verify_slice(&sig).map_err(|_| bad())?;
        let claims: Claims = serde_json::from_slice(&URL_SAFE_NO_PAD.decode(body).map_err(|_| bad())?).map_err(|_| bad())?;
        if claims.exp <= now_ms {
            return Err(ApiError::unauthenticated("token expired"));
        }
        Ok(claims)
    }
}

impl FromRequestParts<AppState> for Principal {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> Result<Self, Self::Rejection> {
        let header = parts.headers.get(axum::http::header::AUTHORIZATION).and_then(|v| v.to_str().ok()).ok_or_else(|| ApiError::unauthenticated("missing bearer token"))?;
        let token = header.strip_prefix("Bearer ").ok_or_else(|| ApiError::unauthenticated("missing bearer token"))?;
        let claims = state.tokens.verify(token.trim(), now_ms())?;
        Ok(Principal { user_id: claims.sub, role: claims.role, auth_provider: claims.provider })
    }
}

/// `$pbkdf2-sha256$i=<rounds>$<salt>$<hash>` with unpadded base64.
pub fn hash_password(password: &str, rounds: u32) -> String {
    let salt: [u8; 16] = rand::random();
    let mut out = [0u8; 32];
    pbkdf2::pbkdf2_hmac::<Sha256>(password.as_bytes(), &salt, rounds, &mut out);
    format!("$pbkdf2-sha256$i={rounds}${}${}", STANDARD_NO_PAD.encode(salt), STANDARD_NO_PAD.encode(out))
}

pub fn verify_password(password: &str, stored: &str) -> bool {
    let mut parts = stored.split('$');
    let (Some(""), Some("pbkdf2-sha256"), Some(rounds), Some(salt), Some(hash), None) = (parts.next(), parts.next(), parts.next(), parts.next(), parts.next(), parts.next()) else {
        return false;
    };
    let (Some(rounds), Ok(salt), Ok(expected)) = (rounds.strip_prefix("i=").and_then(|r| r.parse().ok()), STANDARD_NO_PAD.decode(salt), STANDARD_NO_PAD.decode(hash)) else {
        return false;
    };
    let mut out = vec![0u8; expected.len()];
    pbkdf2::pbkdf2_hmac::<Sha256>(password.as_bytes(), &salt, rounds, &mut out);
    // Constant-time comparison.
    !expected.is_empty() && out.iter().zip(&expected).fold(0u8, |acc, (a, b)| acc | (a ^ b)) == 0
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalIdentity {
    pub subject: String,
    pub role: Role,
}

/// Checks a token issued by an outside identity provider.
pub trait ExternalVerifier: Send + Sync {
    fn verify(&self, provider_token: &str) -> Result<ExternalIdentity, ApiError>;
}

/// Test stand-in for an identity provider. Accepts
/// `stub:<author|student>:<subject>`.
#[derive(Debug, Default, Clone, Copy)]
pub struct StubVerifier;

impl ExternalVerifier for StubVerifier {
    fn verify(&self, provider_token: &str) -> Result<ExternalIdentity, ApiError> {
        let bad = || ApiError::unauthenticated("external token rejected");
        let rest = provider_token.strip_prefix("stub:").ok_or_else(bad)?;
        let (role, subject) = rest.split_once(':').ok_or_else(bad)?;
        let role = match role {
            "author" => Role::Author,
            "student" => Role::Student,
            _ => return Err(bad()),
        };
        if subject.is_empty() {
            return Err(bad());
        }
        Ok(ExternalIdentity { subject: subject.to_owned(), role })
    }
}
