use std::io::Read;
use std::os::unix::process::CommandExt;
use std::process::{Child, Command, Stdio};
use std::sync::{Condvar, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use super::{parse_error_trace, ConfigError, Envelope, ExecStatus, ExecutionResult, ExecutorConfig};

/// Candidate stdout and stderr are each kept up to this many bytes.
pub const OUTPUT_CAP_BYTES: usize = 1 << 20;
pub const TRUNCATION_MARKER: &str = "[qforge: output truncated";

/// Runner stdout carries base64 of both streams, so it gets a looser cap.
const RUNNER_STDOUT_CAP: usize = 8 * OUTPUT_CAP_BYTES;
const RUNNER_STDERR_CAP: usize = 64 * 1024;

/// Executes candidates through the configured runner, at most
/// `config.concurrency()` at a time.
pub struct Sandbox {
    config: ExecutorConfig,
    permits: Mutex<usize>,
    released: Condvar,
}

struct Permit<'a>(&'a Sandbox);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.permits.lock().unwrap() += 1;
        self.0.released.notify_one();
    }
}

impl Sandbox {
    pub fn new(config: ExecutorConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let permits = config.concurrency();
        Ok(Sandbox {
            config,
            permits: Mutex::new(permits),
            released: Condvar::new(),
        })
    }

    pub fn config(&self) -> &ExecutorConfig {
        &self.config
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.permits.lock().unwrap();
        while *free == 0 {
            free = self.released.wait(free).unwrap();
        }
        *free -= 1;
        Permit(self)
    }

    /// Runs `code` and reports how it went. Failures of the sandbox itself
    /// (spawn errors, bad envelopes) come back as `infra_fail`, never as a
    /// generated-code error.
    pub fn execute(&self, code: &str) -> ExecutionResult {
        let _permit = self.acquire();
        let start = Instant::now();
        let elapsed = || start.elapsed().as_millis() as u64;

        let dir = match tempfile::Builder::new().prefix("qforge-run-").tempdir() {
            Ok(d) => d,
            Err(e) => return ExecutionResult::infra_fail(format!("cannot create work dir: {e}"), elapsed()),
        };
        let workdir = dir.path().to_string_lossy().into_owned();
        let file = dir.path().join(&self.config.file_name);
        if let Err(e) = std::fs::write(&file, code) {
            return ExecutionResult::infra_fail(format!("cannot write candidate: {e}"), elapsed());
        }

        let argv = self.config.argv(&file.to_string_lossy());
        let mut cmd = Command::new(&argv[0]);
        cmd.args(&argv[1..])
            .current_dir(dir.path())
            .env_clear()
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .process_group(0);
        for key in &self.config.env_allowlist {
            if let Some(v) = std::env::var_os(key) {
                cmd.env(key, v);
            }
        }
        let mut child = match cmd.spawn() {
            Ok(c) => c,
            Err(e) => return ExecutionResult::infra_fail(format!("cannot start runner `{}`: {e}", argv[0]), elapsed()),
        };

        let out_reader = spawn_reader(child.stdout.take(), RUNNER_STDOUT_CAP);
        let err_reader = spawn_reader(child.stderr.take(), RUNNER_STDERR_CAP);

        let budget = Duration::from_secs_f64(self.config.timeout_s + self.config.grace_s);
        let timed_out = wait_with_deadline(&child, start + budget);
        // The runner is still unreaped here, so its pid names the group.
        kill_group(child.id());
        let status = child.wait();

        let (runner_out, _) = out_reader.join().unwrap_or_default();
        let (runner_err, _) = err_reader.join().unwrap_or_default();
        drop(dir);

        if timed_out {
            return ExecutionResult {
                status: ExecStatus::Timeout,
                exit_code: None,
                stdout: String::new(),
                stderr: format!("runner exceeded {:.3} s and was killed", self.config.timeout_s),
                duration_ms: elapsed(),
                parsed_error: None,
            };
        }

        let envelope = match Envelope::parse(&String::from_utf8_lossy(&runner_out)) {
            Ok(e) => e,
            Err(e) => {
                let runner_stderr = String::from_utf8_lossy(&runner_err);
                let exit = status.map(|s| s.to_string()).unwrap_or_else(|e| e.to_string());
                return ExecutionResult::infra_fail(
                    format!("{e}; runner {exit}; runner stderr: {}", super::stderr_tail(runner_stderr.trim())),
                    elapsed(),
                );
            }
        };
        let stdout = capped(relativize(&envelope.stdout_bytes().unwrap_or_default(), &workdir).as_bytes());
        let stderr = capped(relativize(&envelope.stderr_bytes().unwrap_or_default(), &workdir).as_bytes());
        let parsed_error = match envelope.status {
            ExecStatus::Error => parse_error_trace(&stderr),
            _ => None,
        };
        ExecutionResult {
            status: envelope.status,
            exit_code: envelope.exit_code,
            stdout,
            stderr,
            duration_ms: envelope.duration_ms,
            parsed_error,
        }
    }
}

fn spawn_reader<R: Read + Send + 'static>(pipe: Option<R>, cap: usize) -> JoinHandle<(Vec<u8>, usize)> {
    std::thread::spawn(move || {
        let mut kept = Vec::new();
        let mut total = 0;
        let Some(mut pipe) = pipe else {
            return (kept, total);
        };
        let mut buf = [0u8; 64 * 1024];
        loop {
            match pipe.read(&mut buf) {
                Ok(0) | Err(_) => break,
                Ok(n) => {
                    total += n;
                    let room = cap.saturating_sub(kept.len());
                    kept.extend_from_slice(&buf[..n.min(room)]);
                }
            }
        }
        (kept, total)
    })
}

/// Polls until the child exits (without reaping it) or the deadline passes.
/// Returns true on timeout.
fn wait_with_deadline(child: &Child, deadline: Instant) -> bool {
    let pid = child.id() as libc::id_t;
    let mut pause = Duration::from_millis(1);
    loop {
        // SAFETY: waitid only writes into the zeroed siginfo we own.
        let exited = unsafe {
            let mut info: libc::siginfo_t = std::mem::zeroed();
            let rc = libc::waitid(libc::P_PID, pid, &mut info, libc::WEXITED | libc::WNOHANG | libc::WNOWAIT);
            rc != 0 || info.si_pid() != 0
        };
        if exited {
            return false;
        }
        let now = Instant::now();
        if now >= deadline {
            return true;
        }
        std::thread::sleep(pause.min(deadline - now));
        pause = (pause * 2).min(Duration::from_millis(20));
    }
}

fn kill_group(pgid: u32) {
    // SAFETY: plain syscall; ESRCH for an already empty group is fine.
    unsafe {
        libc::killpg(pgid as libc::pid_t, libc::SIGKILL);
    }
}

/// Paths inside the per-run work dir are reported relative to it, so output
/// does not depend on the random directory name.
fn relativize(bytes: &[u8], workdir: &str) -> String {
    String::from_utf8_lossy(bytes).replace(&format!("{workdir}/"), "").replace(workdir, ".")
}

fn capped(bytes: &[u8]) -> String {
    if bytes.len() <= OUTPUT_CAP_BYTES {
        return String::from_utf8_lossy(bytes).into_owned();
    }
    let mut text = String::from_utf8_lossy(&bytes[..OUTPUT_CAP_BYTES]).into_owned();
    text.push_str(&format!(
        "\n{TRUNCATION_MARKER}, {} of {} bytes omitted]\n",
        bytes.len() - OUTPUT_CAP_BYTES,
        bytes.len()
    ));
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cap_marks_truncation() {
        let small = vec![b'a'; OUTPUT_CAP_BYTES];
        assert_eq!(capped(&small).len(), OUTPUT_CAP_BYTES);
        let big = vec![b'a'; OUTPUT_CAP_BYTES + 10];
        let out = capped(&big);
        assert!(out.starts_with(&"a".repeat(OUTPUT_CAP_BYTES)));
        assert!(out.contains(TRUNCATION_MARKER));
        assert!(out.contains("10 of"));
    }

    #[test]
    fn missing_runner_is_infra_fail() {
        let sb = Sandbox::new(ExecutorConfig::with_runner("/nonexistent/qforge-runner-xyz")).unwrap();
        let r = sb.execute("print(1)");
        assert_eq!(r.status, ExecStatus::InfraFail);
        assert!(r.stderr.contains("cannot start runner"));
    }

    #[test]
    fn non_envelope_output_is_infra_fail() {
        let mut config = ExecutorConfig::with_runner("echo");
        config.command = vec!["echo".into(), "not json {file}".into()];
        let r = Sandbox::new(config).unwrap().execute("x");
        assert_eq!(r.status, ExecStatus::InfraFail);
    }

    #[test]
    fn shell_runner_envelope() {
        // A minimal runner written in sh: always reports ok with "42\n".
        let mut config = ExecutorConfig::default();
        config.command = vec![
            "sh".into(),
            "-c".into(),
            r#"test -f "$0" && printf '{"status":"ok","exit_code":0,"stdout_b64":"NDIK","stderr_b64":"","duration_ms":3}'"#.into(),
            "{file}".into(),
        ];
        let r = Sandbox::new(config).unwrap().execute("print(42)");
        assert_eq!(r.status, ExecStatus::Ok, "{r:?}");
        assert_eq!(r.stdout, "42\n");
        assert_eq!(r.exit_code, Some(0));
    }
}
