//! The generate, execute, judge and repair loop.
//!
//! Pass 1 sends the strategy's prompt. Every later pass sends a repair prompt
//! built from the task, the previous program and its error. A checker mismatch
//! counts as an error here, with the checker's description standing in for the
//! error trace. The loop stops at the first passing program or when the pass
//! budget runs out.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backend::{Backend, BackendError, CompletionRequest, SamplingParams};
use crate::evalsuite::run_checker;
use crate::prompting::{
    build_cot_prompt, build_plain_prompt, build_repair_prompt, seed_exemplars, CotExemplar, ExemplarStyle, PromptError,
};
use crate::rag::{RagContext, RagError, DEFAULT_K};
use crate::sandbox::{stderr_tail, ExecStatus, ExecutionResult, ExecutorConfig, ParsedError, Sandbox};
use crate::task::{CheckerSpec, GenerationTask};

pub const DEFAULT_MAX_PASSES: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Plain,
    Cot,
    Scot,
    Rag,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Plain => "plain",
            Strategy::Cot => "cot",
            Strategy::Scot => "scot",
            Strategy::Rag => "rag",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plain" => Ok(Strategy::Plain),
            "cot" => Ok(Strategy::Cot),
            "scot" => Ok(Strategy::Scot),
            "rag" => Ok(Strategy::Rag),
            other => Err(format!("unknown strategy `{other}` (expected plain, cot, scot or rag)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub max_passes: u32,
    pub strategy: Strategy,
    /// Completions drawn on pass 1 when sampling for pass@k.
    pub samples_n: u32,
    pub sampling: SamplingParams,
    pub retrieval_k: usize,
    pub executor: ExecutorConfig,
    pub backend: String,
    /// When false, execution durations are reported as 0 so that reports
    /// from identical runs are byte-identical.
    pub record_durations: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            max_passes: DEFAULT_MAX_PASSES,
            strategy: Strategy::Plain,
            samples_n: 1,
            sampling: SamplingParams::default(),
            retrieval_k: 0,
            executor: ExecutorConfig::default(),
            backend: "scripted".into(),
            record_durations: true,
        }
    }
}

impl PipelineConfig {
    pub fn with_strategy(strategy: Strategy) -> Self {
        PipelineConfig {
            strategy,
            retrieval_k: if strategy == Strategy::Rag { DEFAULT_K } else { 0 },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::InvalidConfig(m));
        if self.max_passes == 0 {
            return bad("max_passes must be at least 1".into());
        }
        if self.samples_n == 0 {
            return bad("samples_n must be at least 1".into());
        }
        match (self.strategy, self.retrieval_k) {
            (Strategy::Rag, 0) => return bad("rag strategy needs retrieval_k >= 1".into()),
            (Strategy::Rag, _) | (_, 0) => {}
            (s, k) => return bad(format!("retrieval_k is {k} but strategy {} does not retrieve", s.as_str())),
        }
        self.sampling.validate().map_err(PipelineError::Backend)?;
        self.executor.validate().map_err(|e| PipelineError::InvalidConfig(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    SyntacticFail,
    SemanticFail,
    Pass,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attempt {
    pub pass_index: u32,
    pub prompt_used: String,
    pub code: String,
    pub execution: ExecutionResult,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskReport {
    pub task_id: String,
    pub attempts: Vec<Attempt>,
    pub final_verdict: Verdict,
    pub passes_used: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
}

impl From<&PipelineError> for ErrorRecord {
    fn from(e: &PipelineError) -> Self {
        ErrorRecord {
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailedTask {
    pub task_id: String,
    pub error: ErrorRecord,
}

/// One entry of a batch run: a report, or the error that stopped the task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BatchEntry {
    Report(TaskReport),
    Failed(FailedTask),
}

impl BatchEntry {
    pub fn report(&self) -> Option<&TaskReport> {
        match self {
            BatchEntry::Report(r) => Some(r),
            BatchEntry::Failed(_) => None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("backend unreachable: {0}")]
    BackendUnreachable(String),
    #[error(transparent)]
    Backend(BackendError),
    #[error("executor failure: {0}")]
    ExecutorFailure(String),
    #[error("rag strategy selected but no index is loaded")]
    IndexMissing,
    #[error("no tasks to run")]
    NoTasks,
    #[error("invalid pipeline config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Rag(#[from] RagError),
}

impl From<BackendError> for PipelineError {
    fn from(e: BackendError) -> Self {
        match e {
            BackendError::Transport(m) => PipelineError::BackendUnreachable(m),
            other => PipelineError::Backend(other),
        }
    }
}

impl PipelineError {
    pub fn kind(&self) -> &'static str {
        match self {
            PipelineError::BackendUnreachable(_) => "backend_unreachable",
            PipelineError::Backend(e) => e.kind(),
            PipelineError::ExecutorFailure(_) => "executor_failure",
            PipelineError::IndexMissing => "index_missing",
            PipelineError::NoTasks => "no_tasks",
            PipelineError::InvalidConfig(_) => "invalid_config",
            PipelineError::Prompt(e) => e.kind(),
            PipelineError::Rag(e) => e.kind(),
        }
    }
}

/// Total verdict function: a run that did not finish cleanly is a syntactic
/// failure, a clean run failing its checker is a semantic failure, anything
/// else passes.
pub fn classify_verdict(execution: &ExecutionResult, checker: Option<&CheckerSpec>, checker_outcome: Option<bool>) -> Verdict {
    if execution.status != ExecStatus::Ok {
        return Verdict::SyntacticFail;
    }
    match (checker, checker_outcome) {
        (Some(_), Some(false)) => Verdict::SemanticFail,
        _ => Verdict::Pass,
    }
}

/// First fenced block of a completion, or the whole completion when it has none.
pub fn extract_code(completion: &str) -> String {
    let lines: Vec<&str> = completion.split('\n').collect();
    for (i, line) in lines.iter().enumerate() {
        let t = line.trim_start();
        let ticks = t.chars().take_while(|&c| c == '`').count();
        if ticks < 3 {
            continue;
        }
        let end = lines[i + 1..].iter().position(|l| {
            let l = l.trim();
            l.len() >= ticks && l.chars().all(|c| c == '`')
        });
        let body = match end {
            Some(e) => &lines[i + 1..i + 1 + e],
            None => &lines[i + 1..],
        };
        return body.join("\n");
    }
    completion.trim().to_string()
}

pub struct Pipeline {
    config: PipelineConfig,
    backend: Arc<dyn Backend>,
    sandbox: Sandbox,
    rag: Option<RagContext>,
    exemplars: Vec<CotExemplar>,
}

impl Pipeline {
    pub fn new(config: PipelineConfig, backend: Arc<dyn Backend>) -> Result<Self, PipelineError> {
        config.validate()?;
        let sandbox = Sandbox::new(config.executor.clone()).map_err(|e| PipelineError::InvalidConfig(e.to_string()))?;
        let exemplars = match config.strategy {
            Strategy::Cot => seed_exemplars(ExemplarStyle::Cot),
            Strategy::Scot => seed_exemplars(ExemplarStyle::Scot),
            _ => Vec::new(),
        };
        Ok(Pipeline {
            config,
            backend,
            sandbox,
            rag: None,
            exemplars,
        })
    }

    pub fn with_rag(mut self, rag: RagContext) -> Self {
        self.rag = Some(RagContext {
            k: self.config.retrieval_k.max(1),
            ..rag
        });
        self
    }

    /// Replaces the shipped seed exemplars for the cot and scot strategies.
    pub fn with_exemplars(mut self, exemplars: Vec<CotExemplar>) -> Self {
        self.exemplars = exemplars;
        self
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn sandbox(&self) -> &Sandbox {
        &self.sandbox
    }

    pub fn first_prompt(&self, task: &GenerationTask) -> Result<String, PipelineError> {
        Ok(match self.config.strategy {
            Strategy::Plain => build_plain_prompt(task),
            Strategy::Cot => build_cot_prompt(task, &self.exemplars, ExemplarStyle::Cot)?,
            Strategy::Scot => build_cot_prompt(task, &self.exemplars, ExemplarStyle::Scot)?,
            Strategy::Rag => self
                .rag
                .as_ref()
                .ok_or(PipelineError::IndexMissing)?
                .augment(&build_plain_prompt(task))?,
        })
    }

    fn execute(&self, code: &str) -> Result<ExecutionResult, PipelineError> {
        let mut result = self.sandbox.execute(code);
        if result.status == ExecStatus::InfraFail {
            return Err(PipelineError::ExecutorFailure(result.stderr));
        }
        if !self.config.record_durations {
            result.duration_ms = 0;
        }
        Ok(result)
    }

    /// Runs `code` and its checker. Returns the attempt verdict plus the error
    /// to feed a repair pass when it did not pass.
    fn judge(&self, task: &GenerationTask, code: &str) -> Result<(ExecutionResult, Verdict, Option<ParsedError>), PipelineError> {
        let execution = self.execute(code)?;
        let outcome = match (&task.checker, execution.status) {
            (Some(checker), ExecStatus::Ok) => Some(run_checker(checker, code, &execution, &self.sandbox)?),
            _ => None,
        };
        let verdict = classify_verdict(&execution, task.checker.as_ref(), outcome.as_ref().map(|o| o.passed));
        let error = match verdict {
            Verdict::Pass => None,
            Verdict::SemanticFail => Some(ParsedError {
                error_type: "CheckerMismatch".into(),
                message: outcome.map(|o| o.detail).unwrap_or_default(),
                last_frame: None,
            }),
            Verdict::SyntacticFail => Some(self.describe_failure(&execution)),
        };
        Ok((execution, verdict, error))
    }

    fn describe_failure(&self, execution: &ExecutionResult) -> ParsedError {
        if let Some(p) = &execution.parsed_error {
            let mut p = p.clone();
            if p.message.trim().is_empty() {
                p.message = p.error_type.clone();
            }
            return p;
        }
        match execution.status {
            ExecStatus::Timeout => ParsedError {
                error_type: "TimeoutError".into(),
                message: format!("the program did not finish within {} s", self.config.executor.timeout_s),
                last_frame: None,
            },
            _ => {
                let tail = stderr_tail(execution.stderr.trim());
                ParsedError {
                    error_type: "RuntimeError".into(),
                    message: if tail.is_empty() {
                        format!("the program exited with code {:?} and no error output", execution.exit_code)
                    } else {
                        tail.to_string()
                    },
                    last_frame: None,
                }
            }
        }
    }

    fn complete(&self, task: &GenerationTask, prompt: &str, pass_index: u32, n: u32) -> Result<Vec<String>, PipelineError> {
        let request = CompletionRequest::new(prompt, self.config.sampling.with_n(n))
            .tagged(task.id.clone())
            .at_pass(pass_index);
        Ok(self.backend.complete(&request)?.completions)
    }

    pub fn run_task(&self, task: &GenerationTask) -> Result<TaskReport, PipelineError> {
        let mut prompt = self.first_prompt(task)?;
        let mut attempts = Vec::new();
        for pass_index in 1..=self.config.max_passes {
            let completion = self.complete(task, &prompt, pass_index, 1)?.swap_remove(0);
            let code = extract_code(&completion);
            let (execution, verdict, error) = self.judge(task, &code)?;
            attempts.push(Attempt {
                pass_index,
                prompt_used: prompt.clone(),
                code: code.clone(),
                execution,
                verdict,
            });
            let Some(error) = error else { break };
            if pass_index == self.config.max_passes {
                break;
            }
            let shown = if code.trim().is_empty() { "# (the previous reply contained no code)" } else { code.as_str() };
            prompt = build_repair_prompt(&task.prompt, shown, &error)?;
        }
        let last = attempts.last().expect("max_passes >= 1");
        Ok(TaskReport {
            task_id: task.id.clone(),
            final_verdict: last.verdict,
            passes_used: attempts.len() as u32,
            attempts,
        })
    }

    /// Runs tasks in parallel. Results keep input order; a task that errors
    /// becomes a [`FailedTask`] without affecting the others.
    pub fn run_batch(&self, tasks: &[GenerationTask]) -> Result<Vec<BatchEntry>, PipelineError> {
        if tasks.is_empty() {
            return Err(PipelineError::NoTasks);
        }
        Ok(tasks
            .par_iter()
            .map(|task| match self.run_task(task) {
                Ok(report) => BatchEntry::Report(report),
                Err(e) => BatchEntry::Failed(FailedTask {
                    task_id: task.id.clone(),
                    error: ErrorRecord::from(&e),
                }),
            })
            .collect())
    }

    /// `samples_n` pass-1 programs for `task`, each executed and judged.
    pub fn sample_first_pass(&self, task: &GenerationTask) -> Result<Vec<Attempt>, PipelineError> {
        let prompt = self.first_prompt(task)?;
        let completions = self.complete(task, &prompt, 1, self.config.samples_n)?;
        completions
            .par_iter()
            .map(|completion| {
                let code = extract_code(completion);
                let (execution, verdict, _) = self.judge(task, &code)?;
                Ok(Attempt {
                    pass_index: 1,
                    prompt_used: prompt.clone(),
                    code,
                    execution,
                    verdict,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(status: ExecStatus) -> ExecutionResult {
        ExecutionResult {
            status,
            exit_code: if status == ExecStatus::Ok { Some(0) } else { None },
            stdout: String::new(),
            stderr: String::new(),
            duration_ms: 0,
            parsed_error: None,
        }
    }

    #[test]
    fn verdict_table() {
        let checker = CheckerSpec::exact_stdout("1");
        assert_eq!(classify_verdict(&result(ExecStatus::Error), Some(&checker), None), Verdict::SyntacticFail);
        assert_eq!(classify_verdict(&result(ExecStatus::Timeout), None, None), Verdict::SyntacticFail);
        assert_eq!(classify_verdict(&result(ExecStatus::Ok), Some(&checker), Some(false)), Verdict::SemanticFail);
        assert_eq!(classify_verdict(&result(ExecStatus::Ok), Some(&checker), Some(true)), Verdict::Pass);
        assert_eq!(classify_verdict(&result(ExecStatus::Ok), None, None), Verdict::Pass);
    }

    #[test]
    fn code_extraction() {
        assert_eq!(extract_code("Here:\n```python\nprint(1)\n```\nDone."), "print(1)");
        assert_eq!(extract_code("````\na = '```'\n````\n```\nsecond\n```"), "a = '```'");
        assert_eq!(extract_code("  print(2)\n"), "print(2)");
        assert_eq!(extract_code("```python\nunterminated"), "unterminated");
    }

    #[test]
    fn config_rules() {
        assert!(PipelineConfig::default().validate().is_ok());
        assert!(PipelineConfig::with_strategy(Strategy::Rag).validate().is_ok());
        let mut c = PipelineConfig::default();
        c.retrieval_k = 2;
        assert_eq!(c.validate().unwrap_err().kind(), "invalid_config");
        c = PipelineConfig::default();
        c.max_passes = 0;
        assert!(c.validate().is_err());
        c = PipelineConfig::with_strategy(Strategy::Rag);
        c.retrieval_k = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn rag_without_index() {
        let backend: Arc<dyn Backend> = Arc::new(crate::backend::ScriptedBackend::new().with_fallback("x"));
        let p = Pipeline::new(PipelineConfig::with_strategy(Strategy::Rag), backend).unwrap();
        let t = GenerationTask::new("t", "p", crate::task::Category::Basic);
        assert_eq!(p.run_task(&t).unwrap_err().kind(), "index_missing");
    }

    #[test]
    fn attempt_keys() {
        let a = Attempt {
            pass_index: 1,
            prompt_used: "p".into(),
            code: "c".into(),
            execution: result(ExecStatus::Ok),
            verdict: Verdict::Pass,
        };
        let v = serde_json::to_value(&a).unwrap();
        let mut keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        keys.sort();
        assert_eq!(keys, ["code", "execution", "pass_index", "prompt_used", "verdict"]);
    }
}
