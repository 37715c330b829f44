use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "qforge", version, about = "Generate, repair and evaluate quantum programs; simulate surface codes")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON config file; explicit flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed for every random stream [default: 42].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Increase log verbosity (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    /// Model backend: `http`, `scripted:allpass`, or `scripted:<file.json>`.
    #[arg(long, global = true)]
    pub backend: Option<String>,
    /// Cassette file wrapped around the backend.
    #[arg(long, global = true)]
    pub cassette: Option<PathBuf>,
    /// `record` or `replay`.
    #[arg(long, global = true)]
    pub cassette_mode: Option<String>,
    /// Record wall-clock durations in reports. Off by default so that
    /// repeated runs produce identical artifacts.
    #[arg(long, global = true)]
    pub timings: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run tasks through the generate, execute and repair loop.
    Generate(GenerateArgs),
    /// Sample first-pass programs for a suite and report accuracy and pass@k.
    Eval(EvalArgs),
    /// Build or query a retrieval index.
    #[command(subcommand)]
    Rag(RagCommand),
    /// Training-corpus preparation.
    #[command(subcommand)]
    Dataprep(DataprepCommand),
    /// Surface-code layout, decoding and simulation.
    #[command(subcommand)]
    Qec(QecCommand),
    /// Render saved reports as a table or SVG chart.
    Report(ReportArgs),
    /// Built-in runner that interprets a small line-based script language.
    #[command(hide = true)]
    StubRunner {
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        args: Vec<String>,
    },
}

#[derive(Debug, Args, Default)]
pub struct PipelineArgs {
    /// plain, cot, scot or rag.
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long)]
    pub max_passes: Option<u32>,
    /// Runner command; `{file}` and `--timeout {timeout}` are appended.
    #[arg(long)]
    pub runner: Option<String>,
    /// Per-program time limit in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
    /// Retrieval index for the rag strategy.
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Chunks retrieved per prompt under the rag strategy.
    #[arg(long)]
    pub k: Option<usize>,
    /// Directory of exemplar files for the cot and scot strategies.
    #[arg(long)]
    pub exemplars: Option<PathBuf>,
    #[arg(long)]
    pub temperature: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Suite file (JSON lines); the shipped suite when omitted.
    #[arg(long)]
    pub suite: Option<PathBuf>,
    /// Case ids to run; all cases when omitted.
    #[arg(long = "task")]
    pub tasks: Vec<String>,
    /// Run a single ad-hoc prompt instead of suite cases.
    #[arg(long, conflicts_with = "tasks")]
    pub prompt: Option<String>,
    #[arg(long, default_value = "adhoc", requires = "prompt")]
    pub id: String,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Where to write the JSON run report; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub suite: Option<PathBuf>,
    /// Completions sampled per case.
    #[arg(long)]
    pub samples_n: Option<u32>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Also write an accuracy bar chart.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum RagCommand {
    /// Chunk, embed and persist a corpus.
    Index {
        /// API documentation directory.
        #[arg(long)]
        corpus: PathBuf,
        /// Optional algorithm-guide directory.
        #[arg(long)]
        guides: Option<PathBuf>,
        #[arg(long, default_value = "qforge.idx")]
        index: PathBuf,
        #[arg(long, default_value_t = qforge_core::rag::DEFAULT_CHUNK_SIZE)]
        chunk_size: usize,
        #[arg(long, default_value_t = qforge_core::rag::DEFAULT_OVERLAP)]
        overlap: usize,
        #[arg(long, default_value_t = qforge_core::rag::DEFAULT_DIMENSION)]
        dimension: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Top-k chunks for a query.
    Query {
        #[arg(long, default_value = "qforge.idx")]
        index: PathBuf,
        #[arg(long = "q")]
        query: String,
        #[arg(long, default_value_t = qforge_core::rag::DEFAULT_K)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum DataprepCommand {
    /// Keep files updated after the cutoff that import the quantum library.
    Filter {
        #[arg(long)]
        corpus: PathBuf,
        /// YYYY-MM-DD; files must be updated strictly after it.
        #[arg(long, default_value = "2024-02-01")]
        cutoff: String,
        #[arg(long)]
        pattern: Option<String>,
        /// JSON lines of kept files.
        #[arg(long)]
        out: PathBuf,
    },
    /// Split notebooks into tagged tiles and chunk everything into words.
    Split {
        /// JSON lines of corpus files, as written by `filter`.
        #[arg(long, conflicts_with = "corpus", required_unless_present = "corpus")]
        input: Option<PathBuf>,
        /// Corpus directory, read without filtering.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = qforge_core::dataprep::DEFAULT_CHUNK_WORDS)]
        chunk_words: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fill-in-the-middle rewriting of a fraction of chunks.
    Fim {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        rate: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Duplicate chunks, favouring official sources, up to a token target.
    Upsample {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        target: usize,
        #[arg(long, default_value_t = qforge_core::dataprep::DEFAULT_OFFICIAL_WEIGHT)]
        official_weight: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum QecCommand {
    /// Data qubits, stabilizers and logical operators of a distance-d code.
    Layout {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decode injected errors or a recorded syndrome history.
    Decode {
        #[arg(long)]
        d: usize,
        /// Comma-separated Paulis on data qubits, e.g. `X0,Z4,Y8`.
        #[arg(long, conflicts_with = "history", required_unless_present = "history")]
        errors: Option<String>,
        /// JSON file: {"outcomes": [{"x": [..], "z": [..]}, ...]}.
        #[arg(long)]
        history: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo logical error rate with a 95% interval.
    Rate {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        p: f64,
        /// Syndrome flip probability [default: p].
        #[arg(long)]
        q: Option<f64>,
        /// Noisy rounds [default: d].
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Constant Deutsch-Jozsa circuit: ideal, noisy and lower-noise histograms.
    Demo {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 0.05)]
        p_noisy: f64,
        #[arg(long, default_value_t = 0.01)]
        p_corrected: f64,
        #[arg(long, default_value_t = 10_000)]
        shots: u64,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Largest code distance a device coupling map supports.
    Topology {
        /// JSON file: {"qubits": [{"id", "x", "y"}], "edges": [[a, b]]}.
        #[arg(long, conflicts_with_all = ["grid", "chain"])]
        file: Option<PathBuf>,
        /// Full WIDTHxHEIGHT grid, e.g. `7x7`.
        #[arg(long, conflicts_with = "chain")]
        grid: Option<String>,
        /// Linear chain of N qubits.
        #[arg(long)]
        chain: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Suite reports or run reports (JSON).
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}
