//! The HTTP service. One deployable with a router per functional area; all
//! state lives in the repository and the execution pool, so any instance can
//! serve any request.

pub mod auth;
pub mod config;
mod error;
pub mod help_client;
mod middleware;
mod routes;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use axum::Router;
use tutorcast_core::help::QaClient;
use tutorcast_exec::{Executor, Registry};
use tutorcast_recorder::Recorder;
use tutorcast_store::Repository;

pub use auth::{AuthProvider, Claims, ExternalIdentity, ExternalVerifier, Principal, StubVerifier, TokenSigner};
pub use config::{ConfigError, HelpProvider, ServerConfig};
pub use error::ApiError;

/// Version of the request and response bodies, sent as `x-api-version`.
pub const API_VERSION: u32 = 1;
/// Time spent inside the service, in milliseconds with microsecond precision.
pub const DURATION_HEADER: &str = "x-server-duration-ms";

#[derive(Clone)]
pub struct AppState {
    pub recorder: Recorder,
    pub executor: Arc<Executor>,
    pub help: Arc<dyn QaClient>,
    pub tokens: Arc<TokenSigner>,
    pub external: Arc<dyn ExternalVerifier>,
    pub password_rounds: u32,
    cors_origins: Arc<Vec<axum::http::HeaderValue>>,
    delay_ms: Arc<AtomicU64>,
}

impl std::fmt::Debug for AppState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AppState").field("executor", &self.executor).finish_non_exhaustive()
    }
}

impl AppState {
    pub fn new(config: &ServerConfig, repo: Repository) -> std::io::Result<Self> {
        let executor = Executor::new(Arc::new(Registry::with_builtin()), config.exec.clone())?;
        let help = config.help.client().map_err(std::io::Error::other)?;
        let cors_origins = config
            .cors_origins
            .iter()
            .map(|o| axum::http::HeaderValue::from_str(o).map_err(|_| std::io::Error::other(format!("bad CORS origin {o:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(AppState {
            recorder: Recorder::new(repo),
            executor: Arc::new(executor),
            help,
            tokens: Arc::new(TokenSigner::new(config.token_secret.clone(), config.token_ttl_ms)),
            external: Arc::new(StubVerifier),
            password_rounds: config.password_rounds,
            cors_origins: Arc::new(cors_origins),
            delay_ms: Arc::new(AtomicU64::new(config.debug_delay_ms)),
        })
    }

    /// Opens the repository named by the configuration.
    pub fn from_config(config: &ServerConfig) -> std::io::Result<Self> {
        let repo = Repository::open(&config.storage).map_err(std::io::Error::other)?;
        Self::new(config, repo)
    }

    pub fn with_help(mut self, help: Arc<dyn QaClient>) -> Self {
        self.help = help;
        self
    }

    pub fn with_external(mut self, external: Arc<dyn ExternalVerifier>) -> Self {
        self.external = external;
        self
    }

    /// Test hook: every request except `/health` sleeps this long first.
    pub fn set_delay_ms(&self, ms: u64) {
        self.delay_ms.store(ms, Ordering::Relaxed);
    }

    fn delay_ms(&self) -> u64 {
        self.delay_ms.load(Ordering::Relaxed)
    }
}

pub fn app(state: AppState) -> Router {
    let cors = middleware::cors(&state.cors_origins);
    let router = routes::router(state.clone()).layer(axum::middleware::from_fn_with_state(state, middleware::instrument));
    match cors {
        Some(cors) => router.layer(cors),
        None => router,
    }
}

/// Serves until the listener fails or `shutdown` resolves.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState, shutdown: impl std::future::Future<Output = ()> + Send + 'static) -> std::io::Result<()> {
    axum::serve(listener, app(state)).with_graceful_shutdown(shutdown).await
}
