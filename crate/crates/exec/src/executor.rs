use std::os::unix::fs::{chown, PermissionsExt};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;

use crate::plugin::{LanguagePlugin, Registry};
use crate::sandbox::{self, Identity, Job, Policy};
use crate::{ExecError, ExecutionResult, Limits, MAX_SOURCE_BYTES};

const COMPILE_MEMORY_FLOOR: u64 = 1 << 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkPolicy {
    /// Fresh network namespace with no interfaces but loopback.
    #[default]
    Isolated,
    /// Share the host network. For hosts that cannot create namespaces.
    Inherit,
}

#[derive(Debug, Clone)]
pub struct ExecConfig {
    /// Concurrent runs; further requests queue in arrival order.
    pub pool_size: usize,
    pub queue_timeout_ms: u64,
    /// Used when a request gives no limits.
    pub default_limits: Limits,
    /// Upper bound on what a request may ask for.
    pub max_limits: Limits,
    pub network: NetworkPolicy,
    /// Parent of the per-run working directories.
    pub work_root: PathBuf,
    /// uid/gid programs run as when the service itself runs as root.
    pub sandbox_user: (u32, u32),
    /// RLIMIT_NPROC for the sandbox user; 0 leaves it unset.
    pub max_processes: u64,
}

impl Default for ExecConfig {
    fn default() -> Self {
        ExecConfig {
            pool_size: 4,
            queue_timeout_ms: 30_000,
            default_limits: Limits::default(),
            max_limits: Limits { time_ms: 30_000, memory_bytes: 1 << 30, output_bytes: 1 << 20 },
            network: NetworkPolicy::Isolated,
            work_root: std::env::temp_dir(),
            sandbox_user: (65534, 65534),
            max_processes: 64,
        }
    }
}

/// Runs submissions through registered language plugins.
pub struct Executor {
    registry: Arc<Registry>,
    config: ExecConfig,
    policy: Policy,
    permits: Semaphore,
    base: tempfile::TempDir,
}

impl std::fmt::Debug for Executor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Executor").field("config", &self.config).field("base", &self.base.path()).finish()
    }
}

fn infra(e: impl std::fmt::Display) -> ExecError {
    ExecError::Infrastructure(e.to_string())
}

fn expand(template: &[String], source: &Path, workdir: &Path) -> Vec<String> {
    template
        .iter()
        .map(|arg| arg.replace("{source}", &source.to_string_lossy()).replace("{workdir}", &workdir.to_string_lossy()))
        .collect()
}

impl Executor {
    pub fn new(registry: Arc<Registry>, config: ExecConfig) -> std::io::Result<Self> {
        let base = tempfile::Builder::new().prefix("tutorcast-exec-").tempdir_in(&config.work_root)?;
        // Traversable but not listable, so runs cannot find each other.
        std::fs::set_permissions(base.path(), std::fs::Permissions::from_mode(0o311))?;
        let policy = Policy {
            identity: Identity::detect(config.sandbox_user),
            isolate_network: config.network == NetworkPolicy::Isolated,
            max_processes: config.max_processes,
        };
        tracing::debug!(?policy, base = %base.path().display(), "executor ready");
        Ok(Executor { permits: Semaphore::new(config.pool_size.max(1)), registry, config, policy, base })
    }

    pub fn registry(&self) -> &Arc<Registry> {
        &self.registry
    }

    pub fn config(&self) -> &ExecConfig {
        &self.config
    }

    /// Compiles (if the plugin has a compile step) and runs `source`.
    /// Program failures are reported in the result, not as errors.
    pub async fn execute(&self, language_id: &str, source: &str, stdin: &str, limits: Option<Limits>) -> Result<ExecutionResult, ExecError> {
        let plugin = self.registry.get(language_id).ok_or_else(|| ExecError::UnknownLanguage(language_id.to_owned()))?;
        if source.len() > MAX_SOURCE_BYTES {
            return Err(ExecError::SourceTooLarge(source.len()));
        }
        let limits = limits.unwrap_or(self.config.default_limits);
        limits.check()?;
        let limits = limits.capped_by(self.config.max_limits);
        if !plugin.toolchain_available() {
            return Err(ExecError::Infrastructure(format!("toolchain for {language_id:?} is not installed")));
        }

        let wait = Duration::from_millis(self.config.queue_timeout_ms);
        let _permit = match tokio::time::timeout(wait, self.permits.acquire()).await {
            Ok(permit) => permit.map_err(infra)?,
            Err(_) => return Err(ExecError::QueueTimeout(self.config.queue_timeout_ms)),
        };
        self.run_in_workdir(&plugin, source, stdin, limits).await
    }

    async fn run_in_workdir(&self, plugin: &LanguagePlugin, source: &str, stdin: &str, limits: Limits) -> Result<ExecutionResult, ExecError> {
        let workdir = tempfile::Builder::new().prefix("run-").rand_bytes(16).tempdir_in(self.base.path()).map_err(infra)?;
        let dir = workdir.path();
        let source_path = dir.join(&plugin.source_filename);
        std::fs::write(&source_path, source).map_err(infra)?;
        if let Some((uid, gid)) = self.policy.identity.file_owner() {
            chown(dir, Some(uid), Some(gid)).map_err(infra)?;
            chown(&source_path, Some(uid), Some(gid)).map_err(infra)?;
        }
        std::fs::set_permissions(dir, std::fs::Permissions::from_mode(0o700)).map_err(infra)?;
        let address_space = plugin.address_space_bytes.map_or(limits.memory_bytes, |a| a.max(limits.memory_bytes));

        if let Some(compile) = &plugin.compile {
            let argv = expand(compile, &source_path, dir);
            let job = Job {
                argv: &argv,
                workdir: dir,
                stdin: b"",
                time_ms: limits.time_ms,
                address_space_bytes: address_space.max(COMPILE_MEMORY_FLOOR),
                output_bytes: limits.output_bytes,
            };
            let out = sandbox::run(&self.policy, job).await.map_err(infra)?;
            if out.timed_out || !out.status.success() {
                let mut diagnostics = sandbox::decode(&out.stderr, out.truncated);
                if diagnostics.is_empty() {
                    diagnostics = sandbox::decode(&out.stdout, out.truncated);
                }
                return Ok(ExecutionResult {
                    stdout: String::new(),
                    stderr: String::new(),
                    exit_status: out.status,
                    wall_time_ms: out.wall_ms,
                    timed_out: out.timed_out,
                    output_truncated: out.truncated,
                    compile_errors: Some(diagnostics),
                });
            }
        }

        let argv = expand(&plugin.run, &source_path, dir);
        let job = Job {
            argv: &argv,
            workdir: dir,
            stdin: stdin.as_bytes(),
            time_ms: limits.time_ms,
            address_space_bytes: address_space,
            output_bytes: limits.output_bytes,
        };
        let out = sandbox::run(&self.policy, job).await.map_err(infra)?;
        Ok(ExecutionResult {
            stdout: sandbox::decode(&out.stdout, out.truncated),
            stderr: sandbox::decode(&out.stderr, out.truncated),
            exit_status: out.status,
            wall_time_ms: out.wall_ms,
            timed_out: out.timed_out,
            output_truncated: out.truncated,
            compile_errors: None,
        })
    }
}
