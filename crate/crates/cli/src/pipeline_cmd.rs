use std::path::Path;
use std::sync::Arc;

use serde_json::Value;

use qforge_core::backend::{Backend, BackendError, CassetteBackend, CassetteMode, HttpBackend, ScriptedBackend};
use qforge_core::evalsuite::{default_suite, load_suite, render_run_table, render_svg, render_table, run_suite, validate_suite, SuiteReport, TestCase};
use qforge_core::orchestrator::{BatchEntry, Pipeline, PipelineConfig, PipelineError, Strategy};
use qforge_core::prompting::load_exemplar_dir;
use qforge_core::rag::{HashingEmbedder, RagContext, VectorIndex, DEFAULT_K};
use qforge_core::task::GenerationTask;

use crate::args::{EvalArgs, GenerateArgs, PipelineArgs, ReportArgs};
use crate::{emit, write_file, CliError, Context};

const ALLPASS: &str = "scripted:allpass";

fn backend_error(e: BackendError) -> CliError {
    match e {
        BackendError::Config(_) | BackendError::InvalidRequest(_) => CliError::usage(e.kind(), e),
        _ => CliError::infra(e.kind(), e),
    }
}

fn fence(code: &str) -> String {
    let fence = qforge_core::prompting::fence_for(code);
    format!("{fence}python\n{}\n{fence}\n", code.trim_end_matches('\n'))
}

/// Scripted backend answering every suite case with its reference solution.
fn allpass_backend(suite: &[TestCase]) -> ScriptedBackend {
    suite.iter().fold(ScriptedBackend::new(), |b, case| match &case.reference_solution {
        Some(code) => b.with_entry(&case.id, 1, fence(code)),
        None => {
            log::warn!("case {} has no reference solution; {ALLPASS} cannot answer it", case.id);
            b
        }
    })
}

fn build_backend(ctx: &Context, suite: &[TestCase]) -> Result<Arc<dyn Backend>, CliError> {
    let mode = match &ctx.cassette_mode {
        Some(m) => Some(m.parse::<CassetteMode>().map_err(|e| CliError::usage("cassette_mode", e))?),
        None => ctx.cassette.as_ref().map(|_| CassetteMode::Replay),
    };
    let cassette = || {
        ctx.cassette
            .as_deref()
            .ok_or_else(|| CliError::usage("cassette", "--cassette-mode needs --cassette"))
    };
    if mode == Some(CassetteMode::Replay) {
        return Ok(Arc::new(CassetteBackend::replay(cassette()?).map_err(backend_error)?));
    }
    let spec = ctx.backend.as_deref().unwrap_or("http");
    let base: Arc<dyn Backend> = if spec == "http" {
        Arc::new(HttpBackend::from_env().map_err(backend_error)?)
    } else if spec == ALLPASS {
        Arc::new(allpass_backend(suite))
    } else if let Some(file) = spec.strip_prefix("scripted:") {
        Arc::new(ScriptedBackend::load(Path::new(file)).map_err(backend_error)?)
    } else {
        return Err(CliError::usage("backend", format!("unknown backend `{spec}`")));
    };
    match mode {
        Some(CassetteMode::Record) => Ok(Arc::new(CassetteBackend::record(cassette()?, base).map_err(backend_error)?)),
        _ => Ok(base),
    }
}

fn pipeline_config(ctx: &Context, a: &PipelineArgs, samples_n: Option<u32>) -> Result<PipelineConfig, CliError> {
    let mut c = ctx.file.pipeline.clone().unwrap_or_default();
    if let Some(s) = &a.strategy {
        c.strategy = s.parse::<Strategy>().map_err(|e| CliError::usage("strategy", e))?;
        c.retrieval_k = if c.strategy == Strategy::Rag { DEFAULT_K } else { 0 };
    }
    if let Some(k) = a.k {
        c.retrieval_k = k;
    }
    if let Some(n) = a.max_passes {
        c.max_passes = n;
    }
    if let Some(n) = samples_n {
        c.samples_n = n;
    }
    if let Some(t) = a.timeout {
        c.executor.timeout_s = t;
    }
    if let Some(t) = a.temperature {
        c.sampling.temperature = t;
    }
    if let Some(runner) = &a.runner {
        let mut command: Vec<String> = runner.split_whitespace().map(String::from).collect();
        if command.is_empty() {
            return Err(CliError::usage("runner", "empty runner command"));
        }
        // Programs run inside a temporary directory, so pin relative paths here.
        let program = Path::new(&command[0]);
        if program.is_relative() && program.components().count() > 1 {
            command[0] = std::env::current_dir()?.join(program).to_string_lossy().into_owned();
        }
        command.extend(["{file}", "--timeout", "{timeout}"].map(String::from));
        c.executor.command = command;
    }
    c.backend = ctx.backend.clone().unwrap_or_else(|| "http".into());
    c.record_durations = ctx.timings;
    c.validate().map_err(|e| CliError::usage(e.kind(), e))?;
    Ok(c)
}

fn build_pipeline(ctx: &Context, a: &PipelineArgs, config: PipelineConfig, suite: &[TestCase]) -> Result<Pipeline, CliError> {
    let strategy = config.strategy;
    let k = config.retrieval_k;
    let mut pipeline = Pipeline::new(config, build_backend(ctx, suite)?).map_err(|e| CliError::usage(e.kind(), e))?;
    if strategy == Strategy::Rag {
        let path = a
            .index
            .clone()
            .or_else(|| ctx.file.index.clone())
            .ok_or_else(|| CliError::infra(PipelineError::IndexMissing.kind(), "the rag strategy needs --index"))?;
        let index = VectorIndex::load(&path).map_err(|e| CliError::infra(e.kind(), format!("{}: {e}", path.display())))?;
        let embedder = Arc::new(HashingEmbedder::new(index.dimension).map_err(|e| CliError::infra(e.kind(), e))?);
        pipeline = pipeline.with_rag(RagContext::new(index, embedder, k).map_err(|e| CliError::infra(e.kind(), e))?);
    }
    if let Some(dir) = &a.exemplars {
        pipeline = pipeline.with_exemplars(load_exemplar_dir(dir).map_err(|e| CliError::usage(e.kind(), e))?);
    }
    Ok(pipeline)
}

fn read_suite(ctx: &Context, path: Option<&Path>) -> Result<Vec<TestCase>, CliError> {
    match path.or(ctx.file.suite.as_deref()) {
        Some(p) => load_suite(p).map_err(|e| CliError::usage(e.kind(), format!("{}: {e}", p.display()))),
        None => Ok(default_suite()),
    }
}

pub fn generate(ctx: &Context, a: GenerateArgs) -> Result<i32, CliError> {
    let suite = read_suite(ctx, a.suite.as_deref())?;
    let tasks: Vec<GenerationTask> = if let Some(prompt) = &a.prompt {
        vec![GenerationTask::new(a.id.clone(), prompt.clone(), qforge_core::task::Category::Basic)]
    } else if a.tasks.is_empty() {
        suite.iter().map(TestCase::task).collect()
    } else {
        a.tasks
            .iter()
            .map(|id| {
                suite
                    .iter()
                    .find(|c| &c.id == id)
                    .map(TestCase::task)
                    .ok_or_else(|| CliError::usage("unknown_task", format!("no case `{id}` in the suite")))
            })
            .collect::<Result<_, _>>()?
    };
    let config = pipeline_config(ctx, &a.pipeline, None)?;
    let pipeline = build_pipeline(ctx, &a.pipeline, config, &suite)?;
    let entries = pipeline.run_batch(&tasks).map_err(|e| CliError::usage(e.kind(), e))?;
    emit(a.out.as_deref(), &entries, &render_run_table(&entries))?;
    let failed = entries.iter().filter(|e| e.report().is_none()).count();
    if failed > 0 {
        eprintln!("error: {failed} of {} tasks failed with infrastructure errors", entries.len());
        return Ok(1);
    }
    Ok(0)
}

pub fn eval(ctx: &Context, a: EvalArgs) -> Result<i32, CliError> {
    let suite = read_suite(ctx, a.suite.as_deref())?;
    let proportions = validate_suite(&suite).map_err(|e| CliError::usage(e.kind(), e))?;
    for w in &proportions.warnings {
        eprintln!("warning: {w}");
    }
    let config = pipeline_config(ctx, &a.pipeline, a.samples_n)?;
    let pipeline = build_pipeline(ctx, &a.pipeline, config, &suite)?;
    let report = run_suite(&suite, &pipeline, ctx.seed).map_err(|e| CliError::infra(e.kind(), e))?;
    if let Err(e) = report.check() {
        return Err(CliError::infra("report_invariant", e));
    }
    if let Some(svg) = &a.svg {
        write_file(svg, render_svg(std::slice::from_ref(&report)).as_bytes())?;
    }
    emit(a.out.as_deref(), &report, &render_table(&report))?;
    if !report.errors.is_empty() {
        eprintln!("error: {} of {} cases failed with infrastructure errors", report.errors.len(), suite.len());
        return Ok(1);
    }
    Ok(0)
}

enum Loaded {
    Suites(Vec<SuiteReport>),
    Run(Vec<BatchEntry>),
}

fn load_report(path: &Path) -> Result<Loaded, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::usage("io_error", format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| CliError::usage("invalid_report", format!("{}: {e}", path.display())))?;
    let bad = |e: serde_json::Error| CliError::usage("invalid_report", format!("{}: {e}", path.display()));
    let is_suite = |v: &Value| v.get("syntactic_accuracy").is_some();
    match &value {
        Value::Object(_) if is_suite(&value) => Ok(Loaded::Suites(vec![serde_json::from_value(value).map_err(bad)?])),
        Value::Array(items) if items.first().is_some_and(is_suite) => Ok(Loaded::Suites(serde_json::from_value(value).map_err(bad)?)),
        Value::Array(_) => Ok(Loaded::Run(serde_json::from_value(value).map_err(bad)?)),
        _ => Err(CliError::usage("invalid_report", format!("{} is neither a suite report nor a run report", path.display()))),
    }
}

pub fn report(a: ReportArgs) -> Result<i32, CliError> {
    let mut suites = Vec::new();
    for path in &a.inputs {
        match load_report(path)? {
            Loaded::Suites(s) => {
                for r in &s {
                    print!("{}", render_table(r));
                }
                suites.extend(s);
            }
            Loaded::Run(entries) => print!("{}", render_run_table(&entries)),
        }
    }
    if let Some(svg) = &a.svg {
        if suites.is_empty() {
            return Err(CliError::usage("invalid_report", "an SVG chart needs at least one suite report"));
        }
        write_file(svg, render_svg(&suites).as_bytes())?;
    }
    Ok(0)
}
