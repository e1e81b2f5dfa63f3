use std::sync::Arc;
use std::time::Instant;

use tutorcast_exec::{ExecConfig, ExecError, ExecutionResult, Executor, ExitStatus, LanguagePlugin, Limits, PluginError, Registry};

fn executor() -> Executor {
    Executor::new(Arc::new(Registry::with_builtin()), ExecConfig::default()).unwrap()
}

fn limits(time_ms: u64) -> Option<Limits> {
    Some(Limits { time_ms, ..Limits::default() })
}

async fn python(exec: &Executor, code: &str, stdin: &str, time_ms: u64) -> ExecutionResult {
    exec.execute("python", code, stdin, limits(time_ms)).await.unwrap()
}

fn has(program: &str) -> bool {
    LanguagePlugin { language_id: "x".into(), source_filename: "x".into(), compile: None, run: vec![program.into()], address_space_bytes: None }.toolchain_available()
}

#[tokio::test]
async fn hello_python() {
    let r = python(&executor(), "print('hi')", "", 10_000).await;
    assert_eq!(r.stdout, "hi\n");
    assert_eq!(r.exit_status, ExitStatus::Code(0));
    assert!(!r.timed_out && !r.output_truncated && r.compile_errors.is_none());
}

#[tokio::test]
async fn stdin_matches_local_interpreter() {
    let code = "a = int(input())\nb = int(input())\nprint(a + b)\n";
    let r = python(&executor(), code, "3\n4\n", 10_000).await;
    // Oracle: the same interpreter run directly.
    let oracle = std::process::Command::new("python3").args(["-c", code]).stdin(std::process::Stdio::piped()).stdout(std::process::Stdio::piped()).spawn().unwrap();
    use std::io::Write;
    oracle.stdin.as_ref().unwrap().write_all(b"3\n4\n").unwrap();
    let expected = oracle.wait_with_output().unwrap();
    assert_eq!(r.stdout.as_bytes(), expected.stdout);
    assert_eq!(r.stdout, "7\n");
}

#[tokio::test]
async fn runtime_error_reports_stderr_and_code() {
    let r = python(&executor(), "import sys\nprint('x', file=sys.stderr)\nsys.exit(3)", "", 10_000).await;
    assert_eq!(r.stderr, "x\n");
    assert_eq!(r.exit_status, ExitStatus::Code(3));
}

#[tokio::test]
async fn infinite_loop_times_out_with_partial_output() {
    let r = python(&executor(), "print('before', flush=True)\nwhile True:\n    pass\n", "", 2_000).await;
    assert!(r.timed_out);
    assert_eq!(r.stdout, "before\n");
    assert!((2_000..2_500).contains(&r.wall_time_ms), "{}", r.wall_time_ms);
    assert!(matches!(r.exit_status, ExitStatus::Signal(_)));
}

#[tokio::test]
async fn sleeping_and_background_children_are_killed() {
    let exec = executor();
    let r = python(&exec, "import time\ntime.sleep(60)", "", 1_000).await;
    assert!(r.timed_out);
    // A detached grandchild holding stdout must not outlive the run.
    let code = "import subprocess, time\nsubprocess.Popen(['sleep', '60'])\nprint('spawned', flush=True)\ntime.sleep(60)\n";
    let started = Instant::now();
    let r = python(&exec, code, "", 1_000).await;
    assert!(r.timed_out);
    assert_eq!(r.stdout, "spawned\n");
    assert!(started.elapsed().as_millis() < 3_000);
    let code = "import os\nif os.fork() == 0:\n    import time\n    time.sleep(60)\nprint('parent done')\n";
    let started = Instant::now();
    let r = python(&exec, code, "", 5_000).await;
    assert!(!r.timed_out);
    assert_eq!(r.stdout, "parent done\n");
    assert!(started.elapsed().as_millis() < 3_000);
}

#[tokio::test]
async fn output_cap_is_exact() {
    let exec = executor();
    let cap = 1000;
    let r = exec.execute("python", "while True:\n    print('y' * 77)\n", "", Some(Limits { output_bytes: cap, ..Limits::default() })).await.unwrap();
    assert!(r.output_truncated);
    assert!(!r.timed_out);
    assert_eq!(r.stdout.len(), cap);
    assert!(r.stdout.starts_with("yyy"));
    let r = exec.execute("python", "print('y' * 999, end='')", "", Some(Limits { output_bytes: cap, ..Limits::default() })).await.unwrap();
    assert!(!r.output_truncated);
    assert_eq!(r.stdout.len(), 999);
}

#[tokio::test]
async fn network_is_unreachable() {
    let code = "import socket\ns = socket.socket()\ns.settimeout(3)\ntry:\n    s.connect(('1.1.1.1', 80))\n    print('connected')\nexcept OSError as e:\n    print('blocked', e.errno)\n";
    let r = python(&executor(), code, "", 10_000).await;
    assert!(r.stdout.starts_with("blocked"), "{r:?}");
}

#[tokio::test]
async fn memory_limit_is_enforced() {
    let exec = executor();
    let r = exec.execute("python", "x = bytearray(512 * 1024 * 1024)\nprint('allocated')", "", Some(Limits { memory_bytes: 128 << 20, ..Limits::default() })).await.unwrap();
    assert_ne!(r.stdout, "allocated\n");
    assert!(r.stderr.contains("MemoryError"), "{r:?}");
}

#[tokio::test]
async fn runs_cannot_see_each_other() {
    let exec = Arc::new(executor());
    // Every run writes the same file name; each must read back its own value.
    let code = "import os, sys, time\nv = sys.stdin.read()\nopen('main.txt', 'w').write(v)\ntime.sleep(0.2)\nprint(open('main.txt').read(), sorted(os.listdir('.')), end='')\ntry:\n    os.listdir('..')\n    print(' listed')\nexcept PermissionError:\n    print(' denied')\n";
    let tasks: Vec<_> = (0..8)
        .map(|i| {
            let exec = exec.clone();
            tokio::spawn(async move { (i, exec.execute("python", code, &format!("v{i}"), None).await.unwrap()) })
        })
        .collect();
    for t in tasks {
        let (i, r) = t.await.unwrap();
        assert_eq!(r.stdout, format!("v{i} ['main.py', 'main.txt'] denied\n"), "{r:?}");
    }
}

#[tokio::test]
async fn cannot_write_outside_workdir() {
    let code = "import os\nfor p in ['/tmp/escape.txt', '/root/escape.txt', os.path.expanduser('~') + '/../x']:\n    try:\n        open(p, 'w').write('x')\n        print('wrote', p)\n    except OSError:\n        pass\nprint('done')\n";
    let r = python(&executor(), code, "", 10_000).await;
    // /tmp is world-writable, so only the private paths are checked.
    assert!(!r.stdout.contains("/root/"), "{r:?}");
    assert!(!r.stdout.contains("/../x"), "{r:?}");
    let _ = std::fs::remove_file("/tmp/escape.txt");
}

#[tokio::test]
async fn c_compile_error_skips_run() {
    if !has("cc") {
        eprintln!("cc not installed; skipping");
        return;
    }
    let exec = executor();
    let r = exec.execute("c", "int main(void) { return undefined_name; }\n", "", None).await.unwrap();
    let errors = r.compile_errors.expect("compile errors");
    assert!(errors.contains("undefined_name"), "{errors}");
    assert!(r.stdout.is_empty());
    let r = exec.execute("c", "#include <stdio.h>\nint main(void) { int a, b; scanf(\"%d %d\", &a, &b); printf(\"%d\\n\", a * b); return 0; }\n", "6 7\n", None).await.unwrap();
    assert_eq!(r.compile_errors, None);
    assert_eq!(r.stdout, "42\n");
}

#[tokio::test]
async fn java_runs_when_installed() {
    let exec = executor();
    let code = "public class Main { public static void main(String[] a) { System.out.println(\"hi\"); } }\n";
    match exec.execute("java", code, "", None).await {
        Ok(r) => assert_eq!(r.stdout, "hi\n", "{r:?}"),
        Err(ExecError::Infrastructure(msg)) if !has("javac") => eprintln!("skipping: {msg}"),
        Err(e) => panic!("{e}"),
    }
}

#[tokio::test]
async fn request_errors() {
    let exec = executor();
    assert!(matches!(exec.execute("cobol", "", "", None).await, Err(ExecError::UnknownLanguage(l)) if l == "cobol"));
    let big = "#".repeat(tutorcast_exec::MAX_SOURCE_BYTES + 1);
    assert!(matches!(exec.execute("python", &big, "", None).await, Err(ExecError::SourceTooLarge(_))));
    assert!(matches!(exec.execute("python", "", "", limits(0)).await, Err(ExecError::InvalidLimits(_))));
    // Requests above the configured maximum are clamped, not refused.
    let r = exec.execute("python", "print(1)", "", limits(10_000_000)).await.unwrap();
    assert_eq!(r.stdout, "1\n");
}

#[tokio::test]
async fn duplicate_registration_conflicts() {
    let registry = Registry::with_builtin();
    let python = registry.get("python").unwrap();
    assert!(matches!(registry.register((*python).clone()), Err(PluginError::Duplicate(_))));
    let sh = LanguagePlugin { language_id: "sh".into(), source_filename: "main.sh".into(), compile: None, run: vec!["sh".into(), "{source}".into()], address_space_bytes: None };
    registry.register(sh).unwrap();
    let exec = Executor::new(Arc::new(registry), ExecConfig::default()).unwrap();
    let r = exec.execute("sh", "echo from-sh", "", None).await.unwrap();
    assert_eq!(r.stdout, "from-sh\n");
}

#[tokio::test]
async fn queue_times_out_when_pool_is_busy() {
    let exec = Arc::new(Executor::new(Arc::new(Registry::with_builtin()), ExecConfig { pool_size: 1, queue_timeout_ms: 300, ..ExecConfig::default() }).unwrap());
    let busy = {
        let exec = exec.clone();
        tokio::spawn(async move { exec.execute("python", "import time\ntime.sleep(2)", "", None).await })
    };
    tokio::time::sleep(std::time::Duration::from_millis(200)).await;
    assert!(matches!(exec.execute("python", "print(1)", "", None).await, Err(ExecError::QueueTimeout(300))));
    assert!(busy.await.unwrap().is_ok());
    assert_eq!(exec.execute("python", "print(1)", "", None).await.unwrap().stdout, "1\n");
}

#[tokio::test]
async fn fork_bomb_is_contained() {
    let code = "import os\nn = 0\ntry:\n    while True:\n        if os.fork() == 0:\n            import time\n            time.sleep(30)\n            os._exit(0)\n        n += 1\nexcept OSError:\n    print('limited', flush=True)\n";
    let started = Instant::now();
    let r = python(&executor(), code, "", 3_000).await;
    assert!(r.stdout.starts_with("limited"), "{r:?}");
    assert!(started.elapsed().as_millis() < 5_000);
}
