use std::time::{Duration, Instant};

use qforge_core::sandbox::{ExecStatus, ExecutorConfig, Sandbox, OUTPUT_CAP_BYTES, TRUNCATION_MARKER};

fn sandbox(timeout_s: f64) -> Sandbox {
    let mut config = ExecutorConfig::with_runner(env!("CARGO_BIN_EXE_qforge-stub-runner")).timeout(timeout_s);
    config.grace_s = 0.5;
    Sandbox::new(config).unwrap()
}

fn alive(pid: i32) -> bool {
    // Zombies count as dead: read the state field from /proc.
    match std::fs::read_to_string(format!("/proc/{pid}/stat")) {
        Ok(stat) => {
            let state = stat.rsplit_once(')').map(|(_, rest)| rest.trim_start().chars().next());
            !matches!(state, Some(Some('Z')) | Some(Some('X')))
        }
        Err(_) => false,
    }
}

fn child_pid(stdout: &str) -> i32 {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix("child "))
        .expect("child pid line")
        .trim()
        .parse()
        .unwrap()
}

#[test]
fn printing_program_is_ok() {
    let r = sandbox(5.0).execute("print 42\n");
    assert_eq!(r.status, ExecStatus::Ok);
    assert_eq!(r.exit_code, Some(0));
    assert!(r.stdout.contains("42"));
    assert_eq!(r.parsed_error, None);
}

#[test]
fn raising_program_is_error_with_parsed_trace() {
    let r = sandbox(5.0).execute("raise ModuleNotFoundError: No module named 'nonexistent_module_xyz'\n");
    assert_eq!(r.status, ExecStatus::Error);
    assert_eq!(r.exit_code, Some(1));
    let p = r.parsed_error.unwrap();
    assert_eq!(p.error_type, "ModuleNotFoundError");
    assert_eq!(p.message, "No module named 'nonexistent_module_xyz'");
    assert!(p.last_frame.unwrap().0.ends_with("candidate.py"));
}

#[test]
fn runner_timeout_is_reported() {
    let start = Instant::now();
    let r = sandbox(0.5).execute("sleep 30\n");
    assert_eq!(r.status, ExecStatus::Timeout);
    assert_eq!(r.exit_code, None);
    assert!(start.elapsed() < Duration::from_secs(2));
}

#[test]
fn hung_runner_is_killed_by_the_sandbox() {
    let start = Instant::now();
    let r = sandbox(0.5).execute("hang 30\n");
    assert_eq!(r.status, ExecStatus::Timeout);
    assert_eq!(r.exit_code, None);
    assert!(start.elapsed() < Duration::from_secs(3), "{:?}", start.elapsed());
}

#[test]
fn background_children_do_not_survive_a_normal_exit() {
    let r = sandbox(5.0).execute("spawn-sleep 60\nprint done\n");
    assert_eq!(r.status, ExecStatus::Ok, "{r:?}");
    let pid = child_pid(&r.stdout);
    std::thread::sleep(Duration::from_millis(100));
    assert!(!alive(pid), "child {pid} outlived the run");
}

#[test]
fn background_children_do_not_survive_a_timeout() {
    // A killed runner prints no envelope, so look for the child by its argv.
    let r = sandbox(0.5).execute("spawn-sleep 61\nhang 30\n");
    assert_eq!(r.status, ExecStatus::Timeout);
    std::thread::sleep(Duration::from_millis(100));
    let survivors: Vec<i32> = std::fs::read_dir("/proc")
        .unwrap()
        .filter_map(|e| e.ok()?.file_name().to_str()?.parse::<i32>().ok())
        .filter(|pid| {
            std::fs::read(format!("/proc/{pid}/cmdline"))
                .map(|c| c == b"sleep\x0061\x00")
                .unwrap_or(false)
                && alive(*pid)
        })
        .collect();
    assert!(survivors.is_empty(), "orphans: {survivors:?}");
}

#[test]
fn large_output_is_captured_then_truncated() {
    let exact = sandbox(10.0).execute(&format!("spam {OUTPUT_CAP_BYTES}\n"));
    assert_eq!(exact.status, ExecStatus::Ok);
    assert_eq!(exact.stdout.len(), OUTPUT_CAP_BYTES);
    assert!(!exact.stdout.contains(TRUNCATION_MARKER));

    let over = sandbox(10.0).execute(&format!("spam {}\n", OUTPUT_CAP_BYTES + 5000));
    assert!(over.stdout.contains(TRUNCATION_MARKER));
    assert!(over.stdout.starts_with(&"x".repeat(OUTPUT_CAP_BYTES)));
}

#[test]
fn concurrent_executions_are_independent() {
    let sb = sandbox(5.0);
    let results: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..8)
            .map(|i| {
                let sb = &sb;
                s.spawn(move || sb.execute(&format!("print task {i}\n")))
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    for (i, r) in results.iter().enumerate() {
        assert_eq!(r.stdout, format!("task {i}\n"));
    }
}
