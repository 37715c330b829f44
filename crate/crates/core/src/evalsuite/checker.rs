use serde::{Deserialize, Serialize};

use crate::orchestrator::PipelineError;
use crate::sandbox::{stderr_tail, ExecStatus, ExecutionResult, Sandbox};
use crate::task::{CheckerKind, CheckerSpec};

const DETAIL_CHARS: usize = 500;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckerOutcome {
    pub passed: bool,
    /// What differed; empty on success.
    pub detail: String,
}

fn clip(s: &str) -> String {
    let n = s.chars().count();
    if n <= DETAIL_CHARS {
        return s.to_string();
    }
    let head: String = s.chars().take(DETAIL_CHARS).collect();
    format!("{head}... ({} more chars)", n - DETAIL_CHARS)
}

fn normalize(s: &str) -> String {
    s.replace("\r\n", "\n").trim_end().to_string()
}

/// Judges a program that already ran cleanly. Stdout checkers compare
/// against the captured output, ignoring trailing whitespace for
/// `exact_stdout`. An `assertion_script` payload is appended to the program
/// and the combination must run cleanly.
pub fn run_checker(checker: &CheckerSpec, code: &str, execution: &ExecutionResult, sandbox: &Sandbox) -> Result<CheckerOutcome, PipelineError> {
    let ok = || CheckerOutcome {
        passed: true,
        detail: String::new(),
    };
    let fail = |detail: String| CheckerOutcome { passed: false, detail };
    let stdout = normalize(&execution.stdout);
    Ok(match checker.kind {
        CheckerKind::ExactStdout => {
            let expected = normalize(&checker.payload);
            if stdout == expected {
                ok()
            } else {
                fail(format!("expected stdout {:?} but got {:?}", clip(&expected), clip(&stdout)))
            }
        }
        CheckerKind::ContainsStdout => {
            if execution.stdout.contains(&checker.payload) {
                ok()
            } else {
                fail(format!("expected stdout to contain {:?} but got {:?}", clip(&checker.payload), clip(&stdout)))
            }
        }
        CheckerKind::AssertionScript => {
            let combined = format!("{code}\n\n{}\n", checker.payload);
            let run = sandbox.execute(&combined);
            match run.status {
                ExecStatus::Ok => ok(),
                ExecStatus::InfraFail => return Err(PipelineError::ExecutorFailure(run.stderr)),
                ExecStatus::Timeout => fail("assertion script timed out".into()),
                ExecStatus::Error => {
                    let why = match &run.parsed_error {
                        Some(p) => p.to_string(),
                        None => stderr_tail(run.stderr.trim()).to_string(),
                    };
                    fail(format!("assertion script failed: {}", clip(&why)))
                }
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sandbox::ExecutorConfig;

    fn ran(stdout: &str) -> ExecutionResult {
        ExecutionResult {
            status: ExecStatus::Ok,
            exit_code: Some(0),
            stdout: stdout.into(),
            stderr: String::new(),
            duration_ms: 0,
            parsed_error: None,
        }
    }

    fn sandbox() -> Sandbox {
        Sandbox::new(ExecutorConfig::with_runner("/nonexistent/qforge-runner")).unwrap()
    }

    #[test]
    fn exact_ignores_trailing_whitespace() {
        let c = CheckerSpec::exact_stdout("3 5");
        assert!(run_checker(&c, "", &ran("3 5\r\n"), &sandbox()).unwrap().passed);
        let out = run_checker(&c, "", &ran("5 3\n"), &sandbox()).unwrap();
        assert!(!out.passed);
        assert!(out.detail.contains("\"3 5\"") && out.detail.contains("\"5 3\""));
    }

    #[test]
    fn contains() {
        let c = CheckerSpec::contains_stdout("'11'");
        assert!(run_checker(&c, "", &ran("{'11': 1024}\n"), &sandbox()).unwrap().passed);
        assert!(!run_checker(&c, "", &ran("{'00': 1024}\n"), &sandbox()).unwrap().passed);
    }

    #[test]
    fn detail_is_clipped() {
        let c = CheckerSpec::exact_stdout("a");
        let out = run_checker(&c, "", &ran(&"b".repeat(5000)), &sandbox()).unwrap();
        assert!(out.detail.len() < 1200);
        assert!(out.detail.contains("more chars"));
    }

    #[test]
    fn assertion_with_missing_runner_is_infra() {
        let c = CheckerSpec::assertion_script("assert True");
        let err = run_checker(&c, "x = 1", &ran(""), &sandbox()).unwrap_err();
        assert_eq!(err.kind(), "executor_failure");
    }
}
