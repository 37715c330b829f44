use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use super::{cosine, Corpus, DocumentChunk, Embedder, RagError};

pub const MAGIC: &[u8; 4] = b"QFRG";
pub const FORMAT_VERSION: u32 = 1;

/// Exact-search index. Chunk ids equal their position.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    pub dimension: usize,
    pub embedder_id: String,
    pub chunks: Vec<DocumentChunk>,
    pub version: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Retrieved<'a> {
    pub chunk: &'a DocumentChunk,
    pub score: f64,
}

impl VectorIndex {
    pub fn build(chunks: Vec<DocumentChunk>, embedder: &dyn Embedder) -> Result<Self, RagError> {
        let chunks = super::embed_chunks(chunks, embedder)?;
        Self::from_embedded(chunks, embedder.id(), embedder.dimension())
    }

    /// Wraps chunks that already carry embeddings.
    pub fn from_embedded(chunks: Vec<DocumentChunk>, embedder_id: String, dimension: usize) -> Result<Self, RagError> {
        if dimension == 0 {
            return Err(RagError::InvalidParams("dimension must be positive".into()));
        }
        for (i, c) in chunks.iter().enumerate() {
            if c.id as usize != i {
                return Err(RagError::InvalidParams(format!("chunk at position {i} has id {}", c.id)));
            }
            if c.text.is_empty() {
                return Err(RagError::InvalidParams(format!("chunk {i} has empty text")));
            }
            if c.embedding.len() != dimension {
                return Err(RagError::DimensionMismatch {
                    expected: dimension,
                    found: c.embedding.len(),
                });
            }
        }
        Ok(VectorIndex {
            dimension,
            embedder_id,
            chunks,
            version: FORMAT_VERSION,
        })
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<(), RagError> {
        let mut w = BufWriter::new(w);
        w.write_all(MAGIC)?;
        w.write_all(&self.version.to_le_bytes())?;
        w.write_all(&(self.dimension as u32).to_le_bytes())?;
        write_str(&mut w, &self.embedder_id)?;
        w.write_all(&(self.chunks.len() as u32).to_le_bytes())?;
        for c in &self.chunks {
            w.write_all(&c.id.to_le_bytes())?;
            w.write_all(&[c.corpus.tag()])?;
            write_str(&mut w, &c.source)?;
            write_str(&mut w, &c.text)?;
            for x in &c.embedding {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self, RagError> {
        let mut r = BufReader::new(r);
        let mut magic = [0u8; 4];
        read_exact(&mut r, &mut magic)?;
        if &magic != MAGIC {
            return Err(RagError::Corrupt("bad magic".into()));
        }
        let version = read_u32(&mut r)?;
        if version != FORMAT_VERSION {
            return Err(RagError::Corrupt(format!("unsupported version {version}")));
        }
        let dimension = read_u32(&mut r)? as usize;
        let embedder_id = read_string(&mut r)?;
        let count = read_u32(&mut r)? as usize;
        let mut chunks = Vec::with_capacity(count.min(1 << 20));
        let mut buf = vec![0u8; dimension * 4];
        for _ in 0..count {
            let id = read_u32(&mut r)?;
            let mut tag = [0u8];
            read_exact(&mut r, &mut tag)?;
            let corpus = Corpus::from_tag(tag[0]).ok_or_else(|| RagError::Corrupt(format!("corpus tag {}", tag[0])))?;
            let source = read_string(&mut r)?;
            let text = read_string(&mut r)?;
            read_exact(&mut r, &mut buf)?;
            let embedding = buf
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().expect("4-byte chunk")))
                .collect();
            chunks.push(DocumentChunk {
                id,
                source,
                corpus,
                text,
                embedding,
            });
        }
        let mut trailing = [0u8];
        if r.read(&mut trailing)? != 0 {
            return Err(RagError::Corrupt("trailing bytes after last record".into()));
        }
        Self::from_embedded(chunks, embedder_id, dimension).map_err(|e| RagError::Corrupt(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<(), RagError> {
        self.write_to(std::fs::File::create(path)?)
    }

    pub fn load(path: &Path) -> Result<Self, RagError> {
        Self::read_from(std::fs::File::open(path)?)
    }
}

fn write_str<W: Write>(w: &mut W, s: &str) -> std::io::Result<()> {
    w.write_all(&(s.len() as u32).to_le_bytes())?;
    w.write_all(s.as_bytes())
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<(), RagError> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => RagError::Corrupt("truncated file".into()),
        _ => RagError::Io(e),
    })
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, RagError> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_string<R: Read>(r: &mut R) -> Result<String, RagError> {
    let len = read_u32(r)? as usize;
    let mut bytes = Vec::new();
    r.take(len as u64).read_to_end(&mut bytes)?;
    if bytes.len() != len {
        return Err(RagError::Corrupt("truncated file".into()));
    }
    String::from_utf8(bytes).map_err(|e| RagError::Corrupt(e.to_string()))
}

/// Top `k` chunks by cosine similarity to `query`, best first, ties to the
/// lower id.
pub fn retrieve<'a>(index: &'a VectorIndex, embedder: &dyn Embedder, query: &str, k: usize) -> Result<Vec<Retrieved<'a>>, RagError> {
    if embedder.id() != index.embedder_id {
        return Err(RagError::EmbedderMismatch {
            index: index.embedder_id.clone(),
            query: embedder.id(),
        });
    }
    retrieve_by_vector(index, &embedder.embed(query), k)
}

pub fn retrieve_by_vector<'a>(index: &'a VectorIndex, query: &[f32], k: usize) -> Result<Vec<Retrieved<'a>>, RagError> {
    if index.is_empty() {
        return Err(RagError::EmptyIndex);
    }
    if k == 0 {
        return Err(RagError::InvalidParams("k must be at least 1".into()));
    }
    if query.len() != index.dimension {
        return Err(RagError::DimensionMismatch {
            expected: index.dimension,
            found: query.len(),
        });
    }
    let mut scored: Vec<Retrieved<'a>> = index
        .chunks
        .iter()
        .map(|chunk| Retrieved {
            chunk,
            score: cosine(&chunk.embedding, query),
        })
        .collect();
    let by_rank = |a: &Retrieved, b: &Retrieved| b.score.total_cmp(&a.score).then(a.chunk.id.cmp(&b.chunk.id));
    let k = k.min(scored.len());
    if k < scored.len() {
        scored.select_nth_unstable_by(k - 1, by_rank);
        scored.truncate(k);
    }
    scored.sort_by(by_rank);
    Ok(scored)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rag::{chunk_corpus, Document, HashingEmbedder};

    fn index() -> VectorIndex {
        let docs = vec![
            Document {
                path: "grover.md".into(),
                corpus: Corpus::AlgorithmGuides,
                text: "Grover search uses an oracle and a diffusion operator to amplify the marked state.".into(),
            },
            Document {
                path: "api.md".into(),
                corpus: Corpus::ApiDocs,
                text: "QuantumCircuit.h applies a Hadamard gate. QuantumCircuit.cx applies a controlled NOT.".into(),
            },
            Document {
                path: "dup.md".into(),
                corpus: Corpus::ApiDocs,
                text: "QuantumCircuit.h applies a Hadamard gate. QuantumCircuit.cx applies a controlled NOT.".into(),
            },
        ];
        VectorIndex::build(chunk_corpus(&docs, 1000, 200).unwrap(), &HashingEmbedder::default()).unwrap()
    }

    #[test]
    fn identical_query_scores_one() {
        let idx = index();
        let e = HashingEmbedder::default();
        let hits = retrieve(&idx, &e, &idx.chunks[0].text, 1).unwrap();
        assert_eq!(hits[0].chunk.id, 0);
        assert!((hits[0].score - 1.0).abs() < 1e-9);
    }

    #[test]
    fn k_larger_than_index_and_ties() {
        let idx = index();
        let e = HashingEmbedder::default();
        let hits = retrieve(&idx, &e, "hadamard gate", 10).unwrap();
        assert_eq!(hits.len(), 3);
        assert_eq!((hits[0].chunk.id, hits[1].chunk.id), (1, 2));
        assert_eq!(hits[0].score, hits[1].score);
        assert!(hits.windows(2).all(|w| w[0].score >= w[1].score));
    }

    #[test]
    fn errors() {
        let e = HashingEmbedder::default();
        let empty = VectorIndex::from_embedded(Vec::new(), e.id(), 512).unwrap();
        assert_eq!(retrieve(&empty, &e, "q", 1).unwrap_err().kind(), "empty_index");
        let idx = index();
        assert_eq!(retrieve(&idx, &HashingEmbedder::new(64).unwrap(), "q", 1).unwrap_err().kind(), "embedder_mismatch");
        assert!(retrieve(&idx, &e, "q", 0).is_err());
    }

    #[test]
    fn binary_round_trip_and_layout() {
        let idx = index();
        let mut bytes = Vec::new();
        idx.write_to(&mut bytes).unwrap();
        assert_eq!(&bytes[..4], b"QFRG");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 512);
        let back = VectorIndex::read_from(bytes.as_slice()).unwrap();
        assert_eq!(back, idx);
        for (a, b) in back.chunks.iter().zip(&idx.chunks) {
            let bits = |v: &[f32]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&a.embedding), bits(&b.embedding));
        }
        assert_eq!(VectorIndex::read_from(&bytes[..bytes.len() - 1]).unwrap_err().kind(), "corrupt_index");
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(VectorIndex::read_from(bad.as_slice()).unwrap_err().kind(), "corrupt_index");
    }
}
