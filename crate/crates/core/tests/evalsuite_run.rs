use std::sync::Arc;

use qforge_core::backend::ScriptedBackend;
use qforge_core::evalsuite::{pass_at_k, run_suite, TestCase};
use qforge_core::orchestrator::{Pipeline, PipelineConfig, Verdict};
use qforge_core::sandbox::ExecutorConfig;
use qforge_core::task::{Category, CheckerSpec};

fn case(id: &str, category: Category, checker: CheckerSpec) -> TestCase {
    TestCase {
        id: id.into(),
        prompt: format!("Solve {id}"),
        category,
        reference_solution: None,
        checker,
    }
}

fn suite() -> Vec<TestCase> {
    vec![
        case("a", Category::Basic, CheckerSpec::exact_stdout("1")),
        case("b", Category::Intermediate, CheckerSpec::contains_stdout("ok")),
        case("c", Category::Advanced, CheckerSpec::assertion_script("print ok")),
    ]
}

fn pipeline(backend: ScriptedBackend, samples_n: u32) -> Pipeline {
    let mut config = PipelineConfig::default();
    config.samples_n = samples_n;
    config.executor = ExecutorConfig::with_runner(env!("CARGO_BIN_EXE_qforge-stub-runner")).timeout(5.0);
    config.record_durations = false;
    Pipeline::new(config, Arc::new(backend)).unwrap()
}

#[test]
fn all_samples_pass() {
    let backend = ScriptedBackend::new()
        .with_entry("a", 1, "print 1")
        .with_entry("b", 1, "print ok then")
        .with_entry("c", 1, "print 3");
    let r = run_suite(&suite(), &pipeline(backend, 4), 42).unwrap();
    assert_eq!(r.total_samples, 12);
    assert_eq!((r.syntactic_accuracy, r.semantic_accuracy), (1.0, 1.0));
    assert_eq!(r.pass_at_k[&1], 1.0);
    assert!(r.check().is_ok());
}

#[test]
fn samples_run_but_fail_checkers() {
    let backend = ScriptedBackend::new()
        .with_entry("a", 1, "print 2")
        .with_entry("b", 1, "print nope")
        .with_entry("c", 1, "print 3\nraise AssertionError: wrong state");
    let r = run_suite(&suite(), &pipeline(backend, 2), 42).unwrap();
    // The assertion-script case fails by raising, which is a syntactic failure.
    let c = r.cases.iter().find(|c| c.id == "c").unwrap();
    assert!(c.verdicts.iter().all(|v| *v == Verdict::SyntacticFail));
    let stdout_cases = &r.cases[..2];
    assert!(stdout_cases.iter().all(|c| c.verdicts.iter().all(|v| *v == Verdict::SemanticFail)));
    assert!((r.syntactic_accuracy - 4.0 / 6.0).abs() < 1e-12);
    assert_eq!(r.semantic_accuracy, 0.0);
    assert!(r.check().is_ok());
}

#[test]
fn stdout_only_suite_splits_cleanly() {
    let suite = vec![case("a", Category::Basic, CheckerSpec::exact_stdout("1"))];
    let r = run_suite(&suite, &pipeline(ScriptedBackend::new().with_entry("a", 1, "print 2"), 3), 1).unwrap();
    assert_eq!((r.syntactic_accuracy, r.semantic_accuracy), (1.0, 0.0));
}

#[test]
fn assertion_payload_can_fail_semantically() {
    let suite = vec![case("c", Category::Advanced, CheckerSpec::assertion_script("raise AssertionError: bad"))];
    let r = run_suite(&suite, &pipeline(ScriptedBackend::new().with_entry("c", 1, "print 1"), 1), 1).unwrap();
    assert_eq!(r.cases[0].verdicts, [Verdict::SemanticFail]);
}

#[test]
fn mixed_script_gives_case_level_half() {
    let samples = vec!["print 1".to_string(), "print 0".into(), "raise ValueError: x".into(), "print 1".into()];
    let backend = ScriptedBackend::new().with_samples("a", 1, samples);
    let suite = vec![case("a", Category::Basic, CheckerSpec::exact_stdout("1"))];
    let r = run_suite(&suite, &pipeline(backend, 4), 42).unwrap();
    assert_eq!((r.cases[0].n, r.cases[0].c), (4, 2));
    assert_eq!(r.cases[0].pass_at_k[&1], pass_at_k(4, 2, 1).unwrap());
    assert!((r.pass_at_k[&1] - 0.5).abs() < 1e-12);
    assert!((r.syntactic_accuracy - 0.75).abs() < 1e-12);
    assert!((r.semantic_accuracy - 0.5).abs() < 1e-12);
}

#[test]
fn ten_samples_report_three_ks() {
    let samples: Vec<String> = (0..10).map(|i| if i < 3 { "print 1".into() } else { "print 0".into() }).collect();
    let backend = ScriptedBackend::new().with_samples("a", 1, samples);
    let suite = vec![case("a", Category::Basic, CheckerSpec::exact_stdout("1"))];
    let r = run_suite(&suite, &pipeline(backend, 10), 42).unwrap();
    let ks: Vec<u32> = r.pass_at_k.keys().copied().collect();
    assert_eq!(ks, [1, 5, 10]);
    assert!((r.pass_at_k[&5] - pass_at_k(10, 3, 5).unwrap()).abs() < 1e-12);
    assert_eq!(r.pass_at_k[&10], 1.0);
}

#[test]
fn infra_errors_are_recorded_per_case() {
    let backend = ScriptedBackend::new().with_entry("a", 1, "print 1");
    let r = run_suite(&suite(), &pipeline(backend, 1), 42).unwrap();
    assert_eq!(r.cases.len(), 1);
    assert_eq!(r.errors.len(), 2);
    assert!(r.errors.iter().all(|e| e.error.kind == "invalid_request"));
    assert!(run_suite(&[], &pipeline(ScriptedBackend::new(), 1), 42).is_err());
}
