//! Environment configuration.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use tutorcast_core::help::{DisabledClient, FixtureClient, QaClient};
use tutorcast_exec::{ExecConfig, Limits, NetworkPolicy};
use tutorcast_store::{MetadataBackend, StorageConfig};

use crate::auth::DEFAULT_TOKEN_TTL_MS;
use crate::help_client::HttpQaClient;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HelpProvider {
    Disabled,
    /// JSON list of canned postings.
    Fixture(PathBuf),
    /// `GET <url>?q=...&lang=...` returning a JSON list of postings.
    Http(String),
}

impl HelpProvider {
    fn parse(value: &str) -> Result<Self, ConfigError> {
        match value.split_once(':') {
            _ if value == "disabled" || value.is_empty() => Ok(HelpProvider::Disabled),
            Some(("fixture", path)) => Ok(HelpProvider::Fixture(path.into())),
            Some(("http" | "https", _)) => Ok(HelpProvider::Http(value.to_owned())),
            _ => Err(ConfigError(format!("TUTORCAST_HELP: expected disabled, fixture:<path> or an http(s) URL, got {value:?}"))),
        }
    }

    pub fn client(&self) -> Result<Arc<dyn QaClient>, ConfigError> {
        Ok(match self {
            HelpProvider::Disabled => Arc::new(DisabledClient),
            HelpProvider::Fixture(path) => {
                let bytes = std::fs::read(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
                Arc::new(FixtureClient::from_json(&bytes).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?)
            }
            HelpProvider::Http(url) => Arc::new(HttpQaClient::new(url.clone())),
        })
    }
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub bind: SocketAddr,
    pub storage: StorageConfig,
    pub token_secret: Vec<u8>,
    pub token_ttl_ms: u64,
    pub password_rounds: u32,
    pub exec: ExecConfig,
    pub help: HelpProvider,
    pub debug_delay_ms: u64,
    /// Browser origins allowed to call the API cross-origin. Empty sends no CORS headers.
    pub cors_origins: Vec<String>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            storage: StorageConfig { data_dir: "data".into(), metadata: MetadataBackend::Sqlite },
            token_secret: rand::random::<[u8; 32]>().to_vec(),
            token_ttl_ms: DEFAULT_TOKEN_TTL_MS,
            password_rounds: 50_000,
            exec: ExecConfig::default(),
            help: HelpProvider::Disabled,
            debug_delay_ms: 0,
            cors_origins: Vec::new(),
        }
    }
}

fn var(name: &str) -> Option<String> {
    std::env::var(name).ok().filter(|v| !v.is_empty())
}

fn parsed<T: std::str::FromStr>(name: &str) -> Result<Option<T>, ConfigError> {
    var(name).map(|v| v.parse().map_err(|_| ConfigError(format!("{name}: cannot parse {v:?}")))).transpose()
}

impl ServerConfig {
    /// Reads `TUTORCAST_*` variables; unset ones keep their defaults.
    pub fn from_env() -> Result<Self, ConfigError> {
        let mut c = ServerConfig { storage: StorageConfig::from_env().map_err(|e| ConfigError(e.to_string()))?, ..ServerConfig::default() };
        if let Some(bind) = parsed("TUTORCAST_BIND")? {
            c.bind = bind;
        }
        match var("TUTORCAST_TOKEN_SECRET") {
            Some(secret) => c.token_secret = secret.into_bytes(),
            None => tracing::warn!("TUTORCAST_TOKEN_SECRET unset; tokens will not survive a restart or work across instances"),
        }
        if let Some(hours) = parsed::<u64>("TUTORCAST_TOKEN_TTL_HOURS")? {
            c.token_ttl_ms = hours * 3_600_000;
        }
        if let Some(rounds) = parsed("TUTORCAST_PASSWORD_ROUNDS")? {
            c.password_rounds = rounds;
        }
        let limits = &mut c.exec.default_limits;
        if let Some(ms) = parsed("TUTORCAST_EXEC_TIME_MS")? {
            limits.time_ms = ms;
        }
        if let Some(mb) = parsed::<u64>("TUTORCAST_EXEC_MEMORY_MB")? {
            limits.memory_bytes = mb << 20;
        }
        if let Some(kb) = parsed::<usize>("TUTORCAST_EXEC_OUTPUT_KB")? {
            limits.output_bytes = kb << 10;
        }
        c.exec.max_limits = Limits {
            time_ms: c.exec.max_limits.time_ms.max(limits.time_ms),
            memory_bytes: c.exec.max_limits.memory_bytes.max(limits.memory_bytes),
            output_bytes: c.exec.max_limits.output_bytes.max(limits.output_bytes),
        };
        if let Some(n) = parsed("TUTORCAST_EXEC_POOL")? {
            c.exec.pool_size = n;
        }
        if let Some(ms) = parsed("TUTORCAST_EXEC_QUEUE_TIMEOUT_MS")? {
            c.exec.queue_timeout_ms = ms;
        }
        match var("TUTORCAST_EXEC_NETWORK").as_deref() {
            None | Some("isolated") => {}
            Some("inherit") => c.exec.network = NetworkPolicy::Inherit,
            Some(other) => return Err(ConfigError(format!("TUTORCAST_EXEC_NETWORK: expected isolated or inherit, got {other:?}"))),
        }
        if let Some(dir) = var("TUTORCAST_EXEC_WORKDIR") {
            c.exec.work_root = dir.into();
        }
        if let Some(help) = var("TUTORCAST_HELP") {
            c.help = HelpProvider::parse(&help)?;
        }
        if let Some(ms) = parsed("TUTORCAST_DEBUG_DELAY_MS")? {
            c.debug_delay_ms = ms;
        }
        if let Some(origins) = var("TUTORCAST_CORS_ORIGINS") {
            c.cors_origins = origins.split(',').map(|o| o.trim().to_owned()).filter(|o| !o.is_empty()).collect();
        }
        Ok(c)
    }
}
