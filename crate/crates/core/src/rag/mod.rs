//! Retrieval over a local documentation corpus: fixed-window chunking, a
//! pluggable embedder, an exact cosine index with a binary file format, and
//! prompt augmentation.

mod augment;
mod chunk;
mod embed;
mod index;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use augment::{augment_prompt, CONTEXT_HEADER, ESCAPED_HEADER};
pub use chunk::{chunk_corpus, reassemble, DEFAULT_CHUNK_SIZE, DEFAULT_OVERLAP};
pub use embed::{cosine, embed_chunks, tokenize, Embedder, HashingEmbedder, DEFAULT_DIMENSION};
pub use index::{retrieve, retrieve_by_vector, Retrieved, VectorIndex, FORMAT_VERSION, MAGIC};

pub const DEFAULT_K: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Corpus {
    ApiDocs,
    AlgorithmGuides,
}

impl Corpus {
    pub fn tag(self) -> u8 {
        match self {
            Corpus::ApiDocs => 0,
            Corpus::AlgorithmGuides => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Corpus::ApiDocs),
            1 => Some(Corpus::AlgorithmGuides),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub path: String,
    pub corpus: Corpus,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentChunk {
    pub id: u32,
    pub source: String,
    pub corpus: Corpus,
    pub text: String,
    /// Empty until embedded.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub embedding: Vec<f32>,
}

#[derive(Debug, thiserror::Error)]
pub enum RagError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("embedding has dimension {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("index is empty")]
    EmptyIndex,
    #[error("index was built with embedder `{index}` but queried with `{query}`")]
    EmbedderMismatch { index: String, query: String },
    #[error("corrupt index file: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl RagError {
    pub fn kind(&self) -> &'static str {
        match self {
            RagError::InvalidParams(_) => "invalid_params",
            RagError::DimensionMismatch { .. } => "dimension_mismatch",
            RagError::EmptyIndex => "empty_index",
            RagError::EmbedderMismatch { .. } => "embedder_mismatch",
            RagError::Corrupt(_) => "corrupt_index",
            RagError::Io(_) => "io_error",
        }
    }
}

/// A loaded index with its embedder, shared read-only by pipeline workers.
#[derive(Clone)]
pub struct RagContext {
    pub index: Arc<VectorIndex>,
    pub embedder: Arc<dyn Embedder>,
    pub k: usize,
}

impl RagContext {
    pub fn new(index: VectorIndex, embedder: Arc<dyn Embedder>, k: usize) -> Result<Self, RagError> {
        if k == 0 {
            return Err(RagError::InvalidParams("k must be at least 1".into()));
        }
        if index.embedder_id != embedder.id() {
            return Err(RagError::EmbedderMismatch {
                index: index.embedder_id.clone(),
                query: embedder.id(),
            });
        }
        Ok(RagContext {
            index: Arc::new(index),
            embedder,
            k,
        })
    }

    pub fn augment(&self, prompt: &str) -> Result<String, RagError> {
        let hits = retrieve(&self.index, self.embedder.as_ref(), prompt, self.k)?;
        Ok(augment_prompt(prompt, &hits))
    }
}

const TEXT_EXTENSIONS: [&str; 6] = ["md", "txt", "rst", "py", "html", "ipynb"];

/// Reads text files under `dir` (recursively, sorted by path) as documents of
/// one corpus. Paths are recorded relative to `dir`.
pub fn load_documents(dir: &Path, corpus: Corpus) -> Result<Vec<Document>, RagError> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if path.is_dir() {
                walk(&path, out)?;
            } else if path
                .extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| TEXT_EXTENSIONS.contains(&e))
            {
                out.push(path);
            }
        }
        Ok(())
    }
    let mut paths = Vec::new();
    walk(dir, &mut paths)?;
    paths.sort();
    let mut docs = Vec::with_capacity(paths.len());
    for p in paths {
        let text = std::fs::read_to_string(&p)?;
        if text.is_empty() {
            continue;
        }
        let rel = p.strip_prefix(dir).unwrap_or(&p).to_string_lossy().into_owned();
        docs.push(Document { path: rel, corpus, text });
    }
    Ok(docs)
}
