//! Training-corpus preparation: date and import filtering, notebook tiling,
//! word chunking, fill-in-the-middle rewriting and weighted upsampling.
//!
//! A token is a whitespace-delimited word throughout.

mod corpus;
mod fim;
mod upsample;

use std::sync::LazyLock;

use chrono::NaiveDate;
use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

pub use corpus::{load_corpus_dir, read_jsonl, write_jsonl, FileMeta, METADATA_FILE};
pub use fim::{fim_invert, fim_transform, fim_with_cuts, FimSentinels};
pub use upsample::{upsample, DEFAULT_OFFICIAL_WEIGHT};

pub const DEFAULT_IMPORT_PATTERN: &str = r"(?m)^[ \t]*(from[ \t]+qiskit[\w.]*[ \t]+import\b|import[ \t]+qiskit\b)";
pub const DEFAULT_CHUNK_WORDS: usize = 256;

pub fn default_cutoff() -> NaiveDate {
    NaiveDate::from_ymd_opt(2024, 2, 1).expect("valid date")
}

static DEFAULT_IMPORT_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(DEFAULT_IMPORT_PATTERN).expect("valid pattern"));

pub fn default_import_regex() -> Regex {
    DEFAULT_IMPORT_RE.clone()
}

#[derive(Debug, thiserror::Error)]
pub enum DataprepError {
    #[error("malformed notebook {path}: {reason}")]
    MalformedNotebook { path: String, reason: String },
    #[error("invalid upsampling target: {0}")]
    InvalidTarget(String),
    #[error("invalid arguments: {0}")]
    InvalidArgs(String),
    #[error("metadata: {0}")]
    Metadata(String),
    #[error(transparent)]
    Pattern(#[from] regex::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl DataprepError {
    pub fn kind(&self) -> &'static str {
        match self {
            DataprepError::MalformedNotebook { .. } => "malformed_notebook",
            DataprepError::InvalidTarget(_) => "invalid_target",
            DataprepError::InvalidArgs(_) => "invalid_args",
            DataprepError::Metadata(_) => "metadata_error",
            DataprepError::Pattern(_) => "invalid_pattern",
            DataprepError::Io(_) => "io_error",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileKind {
    Source,
    Notebook,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    Code,
    Markdown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub kind: CellKind,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileContent {
    Text(String),
    Cells(Vec<Cell>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusFile {
    pub path: String,
    pub kind: FileKind,
    pub last_updated: NaiveDate,
    pub official: bool,
    #[serde(flatten)]
    pub content: FileContent,
}

impl CorpusFile {
    pub fn source(path: impl Into<String>, last_updated: NaiveDate, official: bool, text: impl Into<String>) -> Self {
        CorpusFile {
            path: path.into(),
            kind: FileKind::Source,
            last_updated,
            official,
            content: FileContent::Text(text.into()),
        }
    }

    pub fn notebook(path: impl Into<String>, last_updated: NaiveDate, official: bool, cells: Vec<Cell>) -> Self {
        CorpusFile {
            path: path.into(),
            kind: FileKind::Notebook,
            last_updated,
            official,
            content: FileContent::Cells(cells),
        }
    }

    /// All text of the file; notebook cells joined by newlines.
    pub fn full_text(&self) -> String {
        match &self.content {
            FileContent::Text(t) => t.clone(),
            FileContent::Cells(cells) => cells.iter().map(|c| c.text.as_str()).collect::<Vec<_>>().join("\n"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainChunk {
    pub text: String,
    pub source: String,
    pub fim_applied: bool,
    /// Inherited from the source file; drives upsampling weight.
    #[serde(default)]
    pub official: bool,
}

pub fn token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

pub fn total_tokens(chunks: &[TrainChunk]) -> usize {
    chunks.iter().map(|c| token_count(&c.text)).sum()
}

/// Files updated strictly after `cutoff` whose text matches `import_pattern`.
pub fn filter_corpus(files: &[CorpusFile], cutoff: NaiveDate, import_pattern: &Regex) -> Vec<CorpusFile> {
    files
        .par_iter()
        .filter(|f| f.last_updated > cutoff && import_pattern.is_match(&f.full_text()))
        .cloned()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NotebookSentinels {
    pub code: String,
    pub text: String,
}

impl Default for NotebookSentinels {
    fn default() -> Self {
        NotebookSentinels {
            code: "<jupyter_code>".into(),
            text: "<jupyter_text>".into(),
        }
    }
}

/// Cell texts in document order, each prefixed with the sentinel for its
/// kind. Cells that are empty or whitespace-only are dropped.
pub fn split_notebook(nb: &CorpusFile, sentinels: &NotebookSentinels) -> Result<Vec<String>, DataprepError> {
    let cells = match (&nb.kind, &nb.content) {
        (FileKind::Notebook, FileContent::Cells(cells)) => cells,
        (kind, _) => {
            return Err(DataprepError::MalformedNotebook {
                path: nb.path.clone(),
                reason: format!("{kind:?} file does not carry notebook cells").to_lowercase(),
            })
        }
    };
    Ok(cells
        .iter()
        .filter(|c| !c.text.trim().is_empty())
        .map(|c| {
            let tag = match c.kind {
                CellKind::Code => &sentinels.code,
                CellKind::Markdown => &sentinels.text,
            };
            format!("{tag}{}", c.text)
        })
        .collect())
}

/// Consecutive spans of `words` tokens. Each span runs from the start of its
/// first word to the start of the next span, so the chunks of a text
/// concatenate back to it (minus leading whitespace).
pub fn chunk_words(text: &str, source: &str, official: bool, words: usize) -> Result<Vec<TrainChunk>, DataprepError> {
    if words == 0 {
        return Err(DataprepError::InvalidArgs("words per chunk must be positive".into()));
    }
    let mut starts = Vec::new();
    let mut in_word = false;
    for (i, ch) in text.char_indices() {
        let ws = ch.is_whitespace();
        if !ws && !in_word {
            starts.push(i);
        }
        in_word = !ws;
    }
    let bounds: Vec<usize> = starts.iter().step_by(words).copied().collect();
    Ok(bounds
        .iter()
        .enumerate()
        .map(|(i, &start)| TrainChunk {
            text: text[start..bounds.get(i + 1).copied().unwrap_or(text.len())].to_string(),
            source: source.to_string(),
            fim_applied: false,
            official,
        })
        .collect())
}

/// Notebook tiles or source text, chunked. Tiles of one notebook are joined
/// by newlines before chunking.
pub fn chunk_file(file: &CorpusFile, sentinels: &NotebookSentinels, words: usize) -> Result<Vec<TrainChunk>, DataprepError> {
    let text = match file.kind {
        FileKind::Notebook => split_notebook(file, sentinels)?.join("\n"),
        FileKind::Source => match &file.content {
            FileContent::Text(t) => t.clone(),
            FileContent::Cells(_) => {
                return Err(DataprepError::InvalidArgs(format!("source file {} carries cells", file.path)));
            }
        },
    };
    chunk_words(&text, &file.path, file.official, words)
}

pub fn chunk_corpus(files: &[CorpusFile], sentinels: &NotebookSentinels, words: usize) -> Result<Vec<TrainChunk>, DataprepError> {
    let per_file: Result<Vec<Vec<TrainChunk>>, _> = files.par_iter().map(|f| chunk_file(f, sentinels, words)).collect();
    Ok(per_file?.into_iter().flatten().collect())
}
