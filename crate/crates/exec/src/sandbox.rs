//! One sandboxed process: its own session and process group, rlimits, no
//! network, a private working directory and capped output pipes.

use std::ffi::CString;
use std::io;
use std::path::Path;
use std::process::Stdio;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use tokio::io::{AsyncRead, AsyncReadExt, AsyncWriteExt};
use tokio::process::Command;
use tokio::sync::Notify;

use crate::ExitStatus;

const PATH_ENV: &str = "/usr/local/bin:/usr/bin:/bin";
const FILE_SIZE_LIMIT: u64 = 16 << 20;
const READER_GRACE: Duration = Duration::from_secs(1);

/// How the child gets its identity and network namespace.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Identity {
    /// Running as root: unshare the network, then drop to this uid/gid.
    Drop { uid: u32, gid: u32 },
    /// Unprivileged: a user namespace mapping our own uid/gid.
    Own { uid: u32, gid: u32 },
}

impl Identity {
    pub(crate) fn detect(sandbox_user: (u32, u32)) -> Identity {
        // SAFETY: getters with no preconditions.
        let (uid, gid) = unsafe { (libc::geteuid(), libc::getegid()) };
        if uid == 0 {
            Identity::Drop { uid: sandbox_user.0, gid: sandbox_user.1 }
        } else {
            Identity::Own { uid, gid }
        }
    }

    /// The uid that will own files the child writes.
    pub(crate) fn file_owner(&self) -> Option<(u32, u32)> {
        match *self {
            Identity::Drop { uid, gid } => Some((uid, gid)),
            Identity::Own { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Policy {
    pub identity: Identity,
    pub isolate_network: bool,
    pub max_processes: u64,
}

pub(crate) struct Job<'a> {
    pub argv: &'a [String],
    pub workdir: &'a Path,
    pub stdin: &'a [u8],
    pub time_ms: u64,
    pub address_space_bytes: u64,
    pub output_bytes: usize,
}

#[derive(Debug)]
pub(crate) struct Outcome {
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
    pub status: ExitStatus,
    pub wall_ms: u64,
    pub timed_out: bool,
    pub truncated: bool,
}

/// Everything the forked child needs, allocated before fork.
struct ChildSetup {
    rlimits: Vec<(libc::__rlimit_resource_t, u64)>,
    identity: Identity,
    isolate_network: bool,
    setgroups_path: CString,
    uid_map_path: CString,
    gid_map_path: CString,
    uid_map: Vec<u8>,
    gid_map: Vec<u8>,
}

fn check(ret: libc::c_int) -> io::Result<()> {
    if ret < 0 {
        Err(io::Error::last_os_error())
    } else {
        Ok(())
    }
}

/// Async-signal-safe whole-file write.
fn write_proc(path: &CString, data: &[u8]) -> io::Result<()> {
    // SAFETY: path is NUL-terminated, data outlives the calls.
    unsafe {
        let fd = libc::open(path.as_ptr(), libc::O_WRONLY | libc::O_CLOEXEC);
        check(fd)?;
        let n = libc::write(fd, data.as_ptr().cast(), data.len());
        libc::close(fd);
        if n != data.len() as isize {
            return Err(io::Error::last_os_error());
        }
    }
    Ok(())
}

impl ChildSetup {
    fn new(policy: &Policy, job: &Job<'_>) -> Self {
        let cpu_secs = job.time_ms.div_ceil(1000) + 1;
        let mut rlimits = vec![
            (libc::RLIMIT_AS, job.address_space_bytes),
            (libc::RLIMIT_CPU, cpu_secs),
            (libc::RLIMIT_FSIZE, FILE_SIZE_LIMIT),
            (libc::RLIMIT_CORE, 0),
        ];
        if policy.max_processes > 0 {
            rlimits.push((libc::RLIMIT_NPROC, policy.max_processes));
        }
        let (uid, gid) = match policy.identity {
            Identity::Drop { uid, gid } | Identity::Own { uid, gid } => (uid, gid),
        };
        ChildSetup {
            rlimits,
            identity: policy.identity,
            isolate_network: policy.isolate_network,
            setgroups_path: CString::new("/proc/self/setgroups").unwrap(),
            uid_map_path: CString::new("/proc/self/uid_map").unwrap(),
            gid_map_path: CString::new("/proc/self/gid_map").unwrap(),
            uid_map: format!("{uid} {uid} 1\n").into_bytes(),
            gid_map: format!("{gid} {gid} 1\n").into_bytes(),
        }
    }

    /// Runs in the child between fork and exec.
    fn apply(&self) -> io::Result<()> {
        // SAFETY: only async-signal-safe libc calls on pre-allocated data.
        unsafe {
            check(libc::setsid())?;
            for &(resource, value) in &self.rlimits {
                let lim = libc::rlimit { rlim_cur: value, rlim_max: value };
                check(libc::setrlimit(resource, &lim))?;
            }
            match self.identity {
                Identity::Drop { uid, gid } => {
                    if self.isolate_network {
                        check(libc::unshare(libc::CLONE_NEWNET))?;
                    }
                    check(libc::setgroups(0, std::ptr::null()))?;
                    check(libc::setgid(gid))?;
                    check(libc::setuid(uid))?;
                }
                Identity::Own { .. } => {
                    if self.isolate_network {
                        check(libc::unshare(libc::CLONE_NEWUSER | libc::CLONE_NEWNET))?;
                        write_proc(&self.setgroups_path, b"deny")?;
                        write_proc(&self.uid_map_path, &self.uid_map)?;
                        write_proc(&self.gid_map_path, &self.gid_map)?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Kills the whole process group when dropped, so a cancelled request
/// leaves nothing running.
struct GroupGuard(Option<i32>);

impl GroupGuard {
    fn kill(&self) {
        if let Some(pgid) = self.0 {
            // SAFETY: signalling a process group we created.
            unsafe {
                libc::killpg(pgid, libc::SIGKILL);
            }
        }
    }
}

impl Drop for GroupGuard {
    fn drop(&mut self) {
        self.kill();
    }
}

/// Reads until EOF, keeping at most `cap` bytes. On overflow it raises
/// `overflow` and stops reading.
async fn read_capped<R: AsyncRead + Unpin>(mut pipe: R, cap: usize, overflowed: Arc<AtomicBool>, overflow: Arc<Notify>) -> Vec<u8> {
    let mut kept = Vec::new();
    let mut chunk = vec![0u8; 8192];
    loop {
        match pipe.read(&mut chunk).await {
            Ok(0) | Err(_) => return kept,
            Ok(n) => {
                let room = cap - kept.len();
                if n > room {
                    kept.extend_from_slice(&chunk[..room]);
                    overflowed.store(true, Ordering::SeqCst);
                    overflow.notify_one();
                    return kept;
                }
                kept.extend_from_slice(&chunk[..n]);
            }
        }
    }
}

fn exit_status(status: std::process::ExitStatus) -> ExitStatus {
    use std::os::unix::process::ExitStatusExt;
    match (status.code(), status.signal()) {
        (Some(code), _) => ExitStatus::Code(code),
        (None, Some(sig)) => ExitStatus::Signal(sig),
        (None, None) => ExitStatus::Code(-1),
    }
}

pub(crate) async fn run(policy: &Policy, job: Job<'_>) -> io::Result<Outcome> {
    let setup = ChildSetup::new(policy, &job);
    let mut cmd = Command::new(&job.argv[0]);
    cmd.args(&job.argv[1..])
        .current_dir(job.workdir)
        .env_clear()
        .env("PATH", PATH_ENV)
        .env("HOME", job.workdir)
        .env("TMPDIR", job.workdir)
        .env("LANG", "C.UTF-8")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .kill_on_drop(true);
    // SAFETY: `apply` only makes async-signal-safe calls.
    unsafe {
        cmd.pre_exec(move || setup.apply());
    }

    let started = Instant::now();
    let deadline = tokio::time::Instant::now() + Duration::from_millis(job.time_ms);
    let mut child = cmd.spawn()?;
    let guard = GroupGuard(child.id().map(|p| p as i32));

    let overflowed = Arc::new(AtomicBool::new(false));
    let overflow = Arc::new(Notify::new());
    let stdout = tokio::spawn(read_capped(child.stdout.take().expect("piped"), job.output_bytes, overflowed.clone(), overflow.clone()));
    let stderr = tokio::spawn(read_capped(child.stderr.take().expect("piped"), job.output_bytes, overflowed.clone(), overflow.clone()));
    let mut stdin = child.stdin.take().expect("piped");
    let input = job.stdin.to_vec();
    // A program that exits without reading its input yields EPIPE; ignored.
    tokio::spawn(async move {
        let _ = stdin.write_all(&input).await;
    });

    let mut timed_out = false;
    let status = tokio::select! {
        status = child.wait() => status?,
        _ = tokio::time::sleep_until(deadline) => {
            timed_out = true;
            guard.kill();
            child.wait().await?
        }
        _ = overflow.notified() => {
            guard.kill();
            child.wait().await?
        }
    };
    let wall_ms = started.elapsed().as_millis() as u64;
    // Background children may still hold the pipes open.
    guard.kill();

    let collect = |h: tokio::task::JoinHandle<Vec<u8>>| async move {
        match tokio::time::timeout(READER_GRACE, h).await {
            Ok(Ok(bytes)) => bytes,
            _ => Vec::new(),
        }
    };
    let stdout = collect(stdout).await;
    let stderr = collect(stderr).await;
    Ok(Outcome { stdout, stderr, status: exit_status(status), wall_ms, timed_out, truncated: overflowed.load(Ordering::SeqCst) })
}

/// Decodes captured bytes. A truncated stream is cut back to the last
/// complete UTF-8 character.
pub(crate) fn decode(bytes: &[u8], truncated: bool) -> String {
    let bytes = match std::str::from_utf8(bytes) {
        Err(e) if truncated && e.error_len().is_none() => &bytes[..e.valid_up_to()],
        _ => bytes,
    };
    String::from_utf8_lossy(bytes).into_owned()
}

#[cfg(test)]
mod tests {
    use super::decode;

    #[test]
    fn decode_trims_partial_char_only_when_truncated() {
        let s = "aé".as_bytes();
        assert_eq!(decode(&s[..2], true), "a");
        assert_eq!(decode(&s[..2], false), "a\u{FFFD}");
        assert_eq!(decode(s, true), "aé");
        assert_eq!(decode(b"\xffx", true), "\u{FFFD}x");
    }
}
