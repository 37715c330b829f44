//! Test suites, sampled evaluation, pass@k and accuracy reports.

mod checker;
mod passk;
mod render;

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use checker::{run_checker, CheckerOutcome};
pub use passk::{pass_at_k, pass_at_k_exact};
pub use render::{render_run_table, render_svg, render_table};

use crate::orchestrator::{ErrorRecord, FailedTask, Pipeline, PipelineError, Verdict};
use crate::task::{Category, CheckerSpec, GenerationTask};

/// Target share of each tier in the shipped suite, in `Category::ALL` order.
pub const TARGET_PROPORTIONS: [f64; 3] = [0.47, 0.24, 0.29];
pub const PROPORTION_TOLERANCE: f64 = 0.02;

const DEFAULT_SUITE: &str = include_str!("../../assets/default_suite.jsonl");

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("invalid arguments: {0}")]
    InvalidArgs(String),
    #[error("no tasks to run")]
    NoTasks,
    #[error("invalid suite: {0}")]
    InvalidSuite(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

impl EvalError {
    pub fn kind(&self) -> &'static str {
        match self {
            EvalError::InvalidArgs(_) => "invalid_args",
            EvalError::NoTasks => "no_tasks",
            EvalError::InvalidSuite(_) => "invalid_suite",
            EvalError::Io(_) => "io_error",
            EvalError::Pipeline(e) => e.kind(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub id: String,
    pub prompt: String,
    pub category: Category,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_solution: Option<String>,
    pub checker: CheckerSpec,
}

impl TestCase {
    pub fn task(&self) -> GenerationTask {
        GenerationTask::new(self.id.clone(), self.prompt.clone(), self.category).with_checker(self.checker.clone())
    }
}

/// One case per non-blank line. Ids must be unique and checker payloads
/// nonempty.
pub fn parse_suite(text: &str) -> Result<Vec<TestCase>, EvalError> {
    let mut cases = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let case: TestCase = serde_json::from_str(line).map_err(|e| EvalError::InvalidSuite(format!("line {}: {e}", i + 1)))?;
        if case.id.is_empty() || case.prompt.trim().is_empty() {
            return Err(EvalError::InvalidSuite(format!("line {}: empty id or prompt", i + 1)));
        }
        if case.checker.payload.trim().is_empty() {
            return Err(EvalError::InvalidSuite(format!("case `{}` has an empty checker payload", case.id)));
        }
        if !seen.insert(case.id.clone()) {
            return Err(EvalError::InvalidSuite(format!("duplicate case id `{}`", case.id)));
        }
        cases.push(case);
    }
    Ok(cases)
}

pub fn load_suite(path: &Path) -> Result<Vec<TestCase>, EvalError> {
    parse_suite(&std::fs::read_to_string(path)?)
}

/// The shipped 17-case suite.
pub fn default_suite() -> Vec<TestCase> {
    parse_suite(DEFAULT_SUITE).expect("shipped suite parses")
}

pub fn default_suite_text() -> &'static str {
    DEFAULT_SUITE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProportionReport {
    pub total: usize,
    pub counts: BTreeMap<Category, usize>,
    pub fractions: BTreeMap<Category, f64>,
    pub warnings: Vec<String>,
}

/// Category shares of `suite`, with a warning for every tier further than
/// two points from its target share.
pub fn validate_suite(suite: &[TestCase]) -> Result<ProportionReport, EvalError> {
    if suite.is_empty() {
        return Err(EvalError::NoTasks);
    }
    let total = suite.len();
    let mut counts = BTreeMap::new();
    let mut fractions = BTreeMap::new();
    let mut warnings = Vec::new();
    for (cat, target) in Category::ALL.into_iter().zip(TARGET_PROPORTIONS) {
        let n = suite.iter().filter(|c| c.category == cat).count();
        let f = n as f64 / total as f64;
        if (f - target).abs() > PROPORTION_TOLERANCE + 1e-12 {
            let w = format!(
                "{} cases make up {:.1}% of the suite, target {:.0}% +/- {:.0}",
                cat.as_str(),
                100.0 * f,
                100.0 * target,
                100.0 * PROPORTION_TOLERANCE
            );
            log::warn!("{w}");
            warnings.push(w);
        }
        counts.insert(cat, n);
        fractions.insert(cat, f);
    }
    Ok(ProportionReport {
        total,
        counts,
        fractions,
        warnings,
    })
}

/// k values reported for `samples_n` samples per case.
pub fn report_ks(samples_n: u32) -> Vec<u32> {
    if samples_n >= 10 {
        vec![1, 5, 10]
    } else {
        vec![1]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub cases: usize,
    pub samples: usize,
    pub syntactic_ok: usize,
    pub semantic_ok: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub id: String,
    pub category: Category,
    pub n: u32,
    pub c: u32,
    pub verdicts: Vec<Verdict>,
    pub pass_at_k: BTreeMap<u32, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub strategy: String,
    pub samples_n: u32,
    pub seed: u64,
    pub categories: BTreeMap<Category, CategoryStats>,
    pub total_samples: usize,
    /// Share of samples that ran without error.
    pub syntactic_accuracy: f64,
    /// Share of samples that ran and satisfied their checker.
    pub semantic_accuracy: f64,
    /// Mean over evaluated cases of the per-case pass@k.
    pub pass_at_k: BTreeMap<u32, f64>,
    pub cases: Vec<CaseResult>,
    pub errors: Vec<FailedTask>,
}

impl SuiteReport {
    /// Checks the report's own invariants.
    pub fn check(&self) -> Result<(), String> {
        let unit = |name: &str, x: f64| {
            if (0.0..=1.0).contains(&x) {
                Ok(())
            } else {
                Err(format!("{name} = {x} outside [0, 1]"))
            }
        };
        unit("syntactic_accuracy", self.syntactic_accuracy)?;
        unit("semantic_accuracy", self.semantic_accuracy)?;
        for (k, v) in &self.pass_at_k {
            unit(&format!("pass@{k}"), *v)?;
        }
        if self.semantic_accuracy > self.syntactic_accuracy {
            return Err(format!(
                "semantic accuracy {} exceeds syntactic accuracy {}",
                self.semantic_accuracy, self.syntactic_accuracy
            ));
        }
        Ok(())
    }
}

fn case_result(case: &TestCase, verdicts: Vec<Verdict>, ks: &[u32]) -> Result<CaseResult, EvalError> {
    let n = verdicts.len() as u32;
    let c = verdicts.iter().filter(|v| **v == Verdict::Pass).count() as u32;
    let mut per_k = BTreeMap::new();
    for &k in ks.iter().filter(|&&k| k <= n) {
        per_k.insert(k, pass_at_k(n as u64, c as u64, k as u64)?);
    }
    Ok(CaseResult {
        id: case.id.clone(),
        category: case.category,
        n,
        c,
        verdicts,
        pass_at_k: per_k,
    })
}

/// Draws `samples_n` first-pass programs per case, judges each, and
/// aggregates accuracies and pass@k. A case whose evaluation hits an
/// infrastructure error is listed under `errors` and excluded from the
/// statistics.
pub fn run_suite(suite: &[TestCase], pipeline: &Pipeline, seed: u64) -> Result<SuiteReport, EvalError> {
    if suite.is_empty() {
        return Err(EvalError::NoTasks);
    }
    let config = pipeline.config();
    let ks = report_ks(config.samples_n);
    let outcomes: Vec<Result<Vec<Verdict>, PipelineError>> = suite
        .par_iter()
        .map(|case| Ok(pipeline.sample_first_pass(&case.task())?.into_iter().map(|a| a.verdict).collect()))
        .collect();

    let mut categories: BTreeMap<Category, CategoryStats> = Category::ALL.iter().map(|&c| (c, CategoryStats::default())).collect();
    let mut cases = Vec::new();
    let mut errors = Vec::new();
    for (case, outcome) in suite.iter().zip(outcomes) {
        match outcome {
            Ok(verdicts) => {
                let stats = categories.get_mut(&case.category).expect("all categories present");
                stats.cases += 1;
                stats.samples += verdicts.len();
                stats.syntactic_ok += verdicts.iter().filter(|v| **v != Verdict::SyntacticFail).count();
                stats.semantic_ok += verdicts.iter().filter(|v| **v == Verdict::Pass).count();
                cases.push(case_result(case, verdicts, &ks)?);
            }
            Err(e) => errors.push(FailedTask {
                task_id: case.id.clone(),
                error: ErrorRecord::from(&e),
            }),
        }
    }

    let total_samples: usize = categories.values().map(|s| s.samples).sum();
    let frac = |x: usize| if total_samples == 0 { 0.0 } else { x as f64 / total_samples as f64 };
    let syntactic_accuracy = frac(categories.values().map(|s| s.syntactic_ok).sum());
    let semantic_accuracy = frac(categories.values().map(|s| s.semantic_ok).sum());
    let mut pass_at_k_mean = BTreeMap::new();
    for &k in &ks {
        let vals: Vec<f64> = cases.iter().filter_map(|c| c.pass_at_k.get(&k).copied()).collect();
        if !vals.is_empty() {
            pass_at_k_mean.insert(k, vals.iter().sum::<f64>() / vals.len() as f64);
        }
    }
    Ok(SuiteReport {
        strategy: config.strategy.as_str().to_string(),
        samples_n: config.samples_n,
        seed,
        categories,
        total_samples,
        syntactic_accuracy,
        semantic_accuracy,
        pass_at_k: pass_at_k_mean,
        cases,
        errors,
    })
}
