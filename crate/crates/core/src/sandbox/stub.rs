//! A tiny stand-in for the interpreter-side runner.
//!
//! It speaks the same command line (`<file> --timeout <s>`) and envelope as the
//! real runner but, instead of running Python, interprets a line-oriented
//! script so sandbox, pipeline and evaluation behavior can be exercised
//! without an interpreter installed:
//!
//! ```text
//! print <text>          write <text> and a newline to stdout
//! eprint <text>         same, to stderr
//! raise <Type>: <msg>   write a traceback ending in "<Type>: <msg>", exit 1
//! exit <code>           stop with the given exit code
//! sleep <secs>          sleep, honoring the runner timeout
//! hang <secs>           sleep, ignoring the runner timeout
//! spawn-sleep <secs>    start a background `sleep` and print "child <pid>"
//! spam <bytes>          write <bytes> copies of 'x' to stdout
//! ```
//!
//! Any other line, blank lines and `#` comments are ignored.

use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use super::{Envelope, ExecStatus};

const USAGE: &str = "usage: <runner> <file> --timeout <seconds>";

/// Entry point shared by the stub binary and the CLI. Prints the envelope and
/// returns the process exit code.
pub fn stub_runner_main(args: &[String]) -> i32 {
    let envelope = match parse_args(args) {
        Ok((file, timeout)) => match std::fs::read_to_string(&file) {
            Ok(script) => run_script(&script, &file, timeout),
            Err(e) => usage_failure(&format!("cannot read {file}: {e}")),
        },
        Err(msg) => usage_failure(&msg),
    };
    println!("{}", envelope.to_json());
    0
}

fn usage_failure(msg: &str) -> Envelope {
    Envelope::new(ExecStatus::InfraFail, None, b"", format!("{msg}\n{USAGE}\n").as_bytes(), 0)
}

fn parse_args(args: &[String]) -> Result<(String, Duration), String> {
    let mut file = None;
    let mut timeout = None;
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--timeout" {
            let v = it.next().ok_or("--timeout needs a value")?;
            let secs: f64 = v.parse().map_err(|_| format!("bad timeout `{v}`"))?;
            if !(secs > 0.0 && secs.is_finite()) {
                return Err(format!("timeout must be positive, got {v}"));
            }
            timeout = Some(Duration::from_secs_f64(secs));
        } else if file.is_none() {
            file = Some(a.clone());
        } else {
            return Err(format!("unexpected argument `{a}`"));
        }
    }
    Ok((file.ok_or("missing file")?, timeout.unwrap_or(Duration::from_secs(30))))
}

/// Interprets `script` and packs the outcome into an envelope.
pub fn run_script(script: &str, file: &str, timeout: Duration) -> Envelope {
    let start = Instant::now();
    let deadline = start + timeout;
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut exit_code = 0;
    let finish = |status, code, out: &[u8], err: &[u8]| {
        Envelope::new(status, code, out, err, start.elapsed().as_millis() as u64)
    };

    for (lineno, raw) in script.lines().enumerate() {
        let line = raw.trim();
        let (cmd, arg) = line.split_once(' ').map_or((line, ""), |(c, a)| (c, a.trim()));
        match cmd {
            "print" => {
                out.extend_from_slice(arg.as_bytes());
                out.push(b'\n');
            }
            "eprint" => {
                err.extend_from_slice(arg.as_bytes());
                err.push(b'\n');
            }
            "raise" => {
                let frame = format!(
                    "Traceback (most recent call last):\n  File \"{file}\", line {}, in <module>\n    {line}\n{arg}\n",
                    lineno + 1
                );
                err.extend_from_slice(frame.as_bytes());
                exit_code = 1;
                break;
            }
            "exit" => {
                exit_code = arg.parse().unwrap_or(1);
                break;
            }
            "sleep" => {
                let want = Duration::from_secs_f64(arg.parse().unwrap_or(0.0));
                let now = Instant::now();
                if now + want >= deadline {
                    std::thread::sleep(deadline.saturating_duration_since(now));
                    return finish(ExecStatus::Timeout, None, &out, &err);
                }
                std::thread::sleep(want);
            }
            "hang" => std::thread::sleep(Duration::from_secs_f64(arg.parse().unwrap_or(0.0))),
            "spawn-sleep" => {
                let child = Command::new("sleep")
                    .arg(if arg.is_empty() { "60" } else { arg })
                    .stdin(Stdio::null())
                    .stdout(Stdio::null())
                    .stderr(Stdio::null())
                    .spawn();
                match child {
                    Ok(c) => out.extend_from_slice(format!("child {}\n", c.id()).as_bytes()),
                    Err(e) => err.extend_from_slice(format!("spawn failed: {e}\n").as_bytes()),
                }
            }
            "spam" => {
                let n: usize = arg.parse().unwrap_or(0);
                out.resize(out.len() + n, b'x');
            }
            _ => {}
        }
    }
    let status = if exit_code == 0 { ExecStatus::Ok } else { ExecStatus::Error };
    finish(status, Some(exit_code), &out, &err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sandbox::parse_error_trace;

    fn run(script: &str) -> Envelope {
        run_script(script, "cand.py", Duration::from_secs(5))
    }

    #[test]
    fn print_and_ok() {
        let e = run("print hi\n# comment\nqc = QuantumCircuit(2)\n");
        assert_eq!(e.status, ExecStatus::Ok);
        assert_eq!(e.exit_code, Some(0));
        assert_eq!(e.stdout_bytes().unwrap(), b"hi\n");
    }

    #[test]
    fn raise_produces_parseable_traceback() {
        let e = run("print before\nraise ImportError: cannot import name 'execute'\nprint after\n");
        assert_eq!(e.status, ExecStatus::Error);
        assert_eq!(e.exit_code, Some(1));
        assert_eq!(e.stdout_bytes().unwrap(), b"before\n");
        let stderr = String::from_utf8(e.stderr_bytes().unwrap()).unwrap();
        let p = parse_error_trace(&stderr).unwrap();
        assert_eq!(p.error_type, "ImportError");
        assert_eq!(p.message, "cannot import name 'execute'");
        assert_eq!(p.last_frame, Some(("cand.py".into(), 2)));
    }

    #[test]
    fn sleep_past_deadline_times_out() {
        let t = Instant::now();
        let e = run_script("sleep 10", "f", Duration::from_millis(100));
        assert_eq!(e.status, ExecStatus::Timeout);
        assert_eq!(e.exit_code, None);
        assert!(t.elapsed() < Duration::from_secs(2));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run("exit 3").exit_code, Some(3));
        assert_eq!(run("exit 0").status, ExecStatus::Ok);
    }

    #[test]
    fn args() {
        let a = |v: &[&str]| parse_args(&v.iter().map(|s| s.to_string()).collect::<Vec<_>>());
        assert_eq!(a(&["f.py", "--timeout", "2"]).unwrap(), ("f.py".to_string(), Duration::from_secs(2)));
        assert!(a(&["--timeout", "2"]).is_err());
        assert!(a(&["f", "--timeout", "-1"]).is_err());
        assert!(a(&["f", "g"]).is_err());
    }
}
