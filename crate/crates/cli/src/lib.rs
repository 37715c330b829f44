//! `qforge` command-line front end.
//!
//! Exit codes: 0 on success (whatever the verdicts in the report), 1 on an
//! infrastructure error, 2 on a usage error.

pub mod args;
mod dataprep_cmd;
mod pipeline_cmd;
mod qec_cmd;
mod rag_cmd;
mod svg;

use std::path::{Path, PathBuf};

use clap::Parser;
use serde::{Deserialize, Serialize};

use args::{Cli, Command, GlobalArgs};
use qforge_core::orchestrator::PipelineConfig;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Infra(String),
}

impl CliError {
    pub fn usage(kind: &str, msg: impl std::fmt::Display) -> Self {
        CliError::Usage(format!("{kind}: {msg}"))
    }

    pub fn infra(kind: &str, msg: impl std::fmt::Display) -> Self {
        CliError::Infra(format!("{kind}: {msg}"))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Infra(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Infra(m) => f.write_str(m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::infra("io_error", e)
    }
}

/// Config file contents. Every key is optional; flags win over it.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub backend: Option<String>,
    pub cassette: Option<PathBuf>,
    pub cassette_mode: Option<String>,
    pub timings: Option<bool>,
    pub suite: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub pipeline: Option<PipelineConfig>,
}

/// Global settings after merging the config file under the flags.
#[derive(Debug, Clone)]
pub struct Context {
    pub seed: u64,
    pub backend: Option<String>,
    pub cassette: Option<PathBuf>,
    pub cassette_mode: Option<String>,
    pub timings: bool,
    pub file: FileConfig,
}

impl Context {
    fn new(global: &GlobalArgs) -> Result<Self, CliError> {
        let file = match &global.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::usage("config", format!("{}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::usage("config", format!("{}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };
        Ok(Context {
            seed: global.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            backend: global.backend.clone().or_else(|| file.backend.clone()),
            cassette: global.cassette.clone().or_else(|| file.cassette.clone()),
            cassette_mode: global.cassette_mode.clone().or_else(|| file.cassette_mode.clone()),
            timings: global.timings || file.timings.unwrap_or(false),
            file,
        })
    }
}

/// Writes `artifact` as pretty JSON to `out` and prints `human` to stdout;
/// without `out` the JSON itself goes to stdout.
pub(crate) fn emit<T: Serialize>(out: Option<&Path>, artifact: &T, human: &str) -> Result<(), CliError> {
    let mut json = serde_json::to_string_pretty(artifact).map_err(|e| CliError::infra("serialize", e))?;
    json.push('\n');
    match out {
        Some(path) => {
            write_file(path, json.as_bytes())?;
            print!("{human}");
            if !human.ends_with('\n') {
                println!();
            }
        }
        None => print!("{json}"),
    }
    Ok(())
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::infra("io_error", format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::infra("io_error", format!("{}: {e}", path.display())))
}

fn init_logging(verbosity: u8) {
    let level = match verbosity {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).format_timestamp(None).try_init();
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Command::StubRunner { args } = &cli.command {
        return qforge_core::sandbox::stub::stub_runner_main(args);
    }
    init_logging(cli.global.verbose);
    let result = Context::new(&cli.global).and_then(|ctx| dispatch(&ctx, cli.command));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(ctx: &Context, command: Command) -> Result<i32, CliError> {
    match command {
        Command::Generate(a) => pipeline_cmd::generate(ctx, a),
        Command::Eval(a) => pipeline_cmd::eval(ctx, a),
        Command::Report(a) => pipeline_cmd::report(a),
        Command::Rag(c) => rag_cmd::run(c).map(|_| 0),
        Command::Dataprep(c) => dataprep_cmd::run(ctx, c).map(|_| 0),
        Command::Qec(c) => qec_cmd::run(ctx, c).map(|_| 0),
        Command::StubRunner { .. } => unreachable!("handled before dispatch"),
    }
}
