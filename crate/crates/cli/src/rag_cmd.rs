use std::path::Path;

use serde::Serialize;

use qforge_core::rag::{chunk_corpus, load_documents, retrieve, Corpus, Embedder, HashingEmbedder, RagError, VectorIndex};

use crate::args::RagCommand;
use crate::{emit, CliError};

fn rag_error(e: RagError) -> CliError {
    match e {
        RagError::InvalidParams(_) => CliError::usage(e.kind(), e),
        _ => CliError::infra(e.kind(), e),
    }
}

fn at(path: &Path) -> impl Fn(RagError) -> CliError + '_ {
    move |e| match e {
        RagError::InvalidParams(_) => CliError::usage(e.kind(), e),
        _ => CliError::infra(e.kind(), format!("{}: {e}", path.display())),
    }
}

#[derive(Serialize)]
struct IndexSummary<'a> {
    index: &'a Path,
    documents: usize,
    chunks: usize,
    dimension: usize,
    embedder: String,
}

#[derive(Serialize)]
struct Hit<'a> {
    rank: usize,
    id: u32,
    source: &'a str,
    corpus: Corpus,
    score: f64,
    text: &'a str,
}

#[derive(Serialize)]
struct QueryResult<'a> {
    query: &'a str,
    k: usize,
    results: Vec<Hit<'a>>,
}

pub fn run(command: RagCommand) -> Result<(), CliError> {
    match command {
        RagCommand::Index {
            corpus,
            guides,
            index,
            chunk_size,
            overlap,
            dimension,
            out,
        } => {
            let mut documents = load_documents(&corpus, Corpus::ApiDocs).map_err(at(&corpus))?;
            if let Some(g) = &guides {
                documents.extend(load_documents(g, Corpus::AlgorithmGuides).map_err(at(g))?);
            }
            if documents.is_empty() {
                return Err(CliError::usage("empty_corpus", "no documents found"));
            }
            let chunks = chunk_corpus(&documents, chunk_size, overlap).map_err(rag_error)?;
            let embedder = HashingEmbedder::new(dimension).map_err(rag_error)?;
            let built = VectorIndex::build(chunks, &embedder).map_err(rag_error)?;
            built.save(&index).map_err(at(&index))?;
            let summary = IndexSummary {
                index: &index,
                documents: documents.len(),
                chunks: built.chunks.len(),
                dimension,
                embedder: embedder.id(),
            };
            let human = format!(
                "indexed {} documents into {} chunks at {}\n",
                summary.documents,
                summary.chunks,
                index.display()
            );
            emit(out.as_deref(), &summary, &human)
        }
        RagCommand::Query { index, query, k, out } => {
            let loaded = VectorIndex::load(&index).map_err(|e| match e {
                RagError::Io(_) => CliError::infra("index_missing", format!("{}: {e}", index.display())),
                e => at(&index)(e),
            })?;
            let embedder = HashingEmbedder::new(loaded.dimension).map_err(rag_error)?;
            if loaded.embedder_id != embedder.id() {
                return Err(rag_error(RagError::EmbedderMismatch {
                    index: loaded.embedder_id.clone(),
                    query: embedder.id(),
                }));
            }
            let hits = retrieve(&loaded, &embedder, &query, k).map_err(rag_error)?;
            let result = QueryResult {
                query: &query,
                k,
                results: hits
                    .iter()
                    .enumerate()
                    .map(|(i, h)| Hit {
                        rank: i + 1,
                        id: h.chunk.id,
                        source: &h.chunk.source,
                        corpus: h.chunk.corpus,
                        score: h.score,
                        text: &h.chunk.text,
                    })
                    .collect(),
            };
            let human: String = result
                .results
                .iter()
                .map(|h| format!("{:>2}  {:.4}  {}#{}\n", h.rank, h.score, h.source, h.id))
                .collect();
            emit(out.as_deref(), &result, &human)
        }
    }
}
