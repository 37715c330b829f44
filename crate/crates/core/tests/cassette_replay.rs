use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use qforge_core::backend::{Backend, BackendError, CassetteBackend, CompletionRequest, CompletionResponse, SamplingParams};
use qforge_core::orchestrator::{Pipeline, PipelineConfig};
use qforge_core::sandbox::ExecutorConfig;
use qforge_core::task::{Category, CheckerSpec, GenerationTask};

/// Answers every request with its own prompt length and counts calls.
#[derive(Default)]
struct Counting {
    calls: AtomicUsize,
}

impl Backend for Counting {
    fn id(&self) -> &str {
        "counting"
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, BackendError> {
        let call = self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(CompletionResponse {
            completions: (0..request.params.n)
                .map(|i| format!("```\nprint {}\n```", request.prompt.len() + call * 1000 + i as usize))
                .collect(),
            backend_id: "counting".into(),
            latency_ms: 5,
        })
    }
}

#[test]
fn replay_serves_recorded_responses_without_the_live_backend() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.jsonl");
    let live = Arc::new(Counting::default());
    let requests: Vec<CompletionRequest> = (0..4)
        .map(|i| CompletionRequest::new(format!("prompt {i}"), SamplingParams::default().with_n(3)).tagged("t"))
        .collect();

    let recorder = CassetteBackend::record(&path, live.clone()).unwrap();
    let recorded: Vec<CompletionResponse> = requests.iter().map(|r| recorder.complete(r).unwrap()).collect();
    // A repeated request is served from the cassette.
    assert_eq!(recorder.complete(&requests[0]).unwrap().completions, recorded[0].completions);
    assert_eq!(live.calls.load(Ordering::SeqCst), 4);
    drop(recorder);

    let replay = CassetteBackend::replay(&path).unwrap();
    for (r, want) in requests.iter().zip(&recorded) {
        assert_eq!(replay.complete(r).unwrap().completions, want.completions);
    }
    assert_eq!(live.calls.load(Ordering::SeqCst), 4);
    let unseen = CompletionRequest::new("never recorded", SamplingParams::default());
    assert_eq!(replay.complete(&unseen).unwrap_err().kind(), "cassette_miss");
}

#[test]
fn pipeline_run_replays_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.jsonl");
    let mut config = PipelineConfig::default();
    config.executor = ExecutorConfig::with_runner(env!("CARGO_BIN_EXE_qforge-stub-runner")).timeout(5.0);
    config.record_durations = false;
    let task = GenerationTask::new("t", "Print a number", Category::Basic).with_checker(CheckerSpec::exact_stdout("never"));

    let live = Arc::new(Counting::default());
    let recorder = Arc::new(CassetteBackend::record(&path, live.clone()).unwrap());
    let first = Pipeline::new(config.clone(), recorder).unwrap().run_task(&task).unwrap();
    assert_eq!(first.passes_used, 3);
    assert_eq!(live.calls.load(Ordering::SeqCst), 3);

    let replay = Arc::new(CassetteBackend::replay(&path).unwrap());
    let second = Pipeline::new(config, replay).unwrap().run_task(&task).unwrap();
    assert_eq!(serde_json::to_string(&first).unwrap(), serde_json::to_string(&second).unwrap());
    assert_eq!(live.calls.load(Ordering::SeqCst), 3);
}
