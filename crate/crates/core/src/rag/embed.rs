use super::{DocumentChunk, RagError};

pub const DEFAULT_DIMENSION: usize = 512;

pub trait Embedder: Send + Sync {
    /// Stored in the index so queries are embedded the same way.
    fn id(&self) -> String;
    fn dimension(&self) -> usize;
    fn embed(&self, text: &str) -> Vec<f32>;
}

/// Offline embedder: counts of lowercased word tokens hashed (FNV-1a) into
/// `dimension` buckets, then L2-normalized. Text without tokens maps to the
/// zero vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashingEmbedder {
    dimension: usize,
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        HashingEmbedder {
            dimension: DEFAULT_DIMENSION,
        }
    }
}

impl HashingEmbedder {
    pub fn new(dimension: usize) -> Result<Self, RagError> {
        if dimension == 0 {
            return Err(RagError::InvalidParams("embedding dimension must be positive".into()));
        }
        Ok(HashingEmbedder { dimension })
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Maximal runs of alphanumerics and underscores, lowercased.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

impl Embedder for HashingEmbedder {
    fn id(&self) -> String {
        format!("hashed-bow-fnv1a-{}", self.dimension)
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Vec<f32> {
        let mut counts = vec![0f64; self.dimension];
        for token in tokenize(text) {
            counts[(fnv1a(token.as_bytes()) % self.dimension as u64) as usize] += 1.0;
        }
        let norm = counts.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm == 0.0 {
            return vec![0.0; self.dimension];
        }
        counts.iter().map(|c| (c / norm) as f32).collect()
    }
}

pub fn embed_chunks(chunks: Vec<DocumentChunk>, embedder: &dyn Embedder) -> Result<Vec<DocumentChunk>, RagError> {
    let d = embedder.dimension();
    chunks
        .into_iter()
        .map(|mut c| {
            let v = embedder.embed(&c.text);
            if v.len() != d {
                return Err(RagError::DimensionMismatch {
                    expected: d,
                    found: v.len(),
                });
            }
            c.embedding = v;
            Ok(c)
        })
        .collect()
}

/// Cosine similarity accumulated in f64, clamped to [-1, 1]; 0 when either
/// vector is zero.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let (mut dot, mut na, mut nb) = (0f64, 0f64, 0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64, y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rag::Corpus;

    #[test]
    fn deterministic_and_normalized() {
        let e = HashingEmbedder::default();
        let a = e.embed("Grover oracle marks the target state");
        assert_eq!(a, e.embed("Grover oracle marks the target state"));
        assert_eq!(a.len(), 512);
        let norm: f64 = a.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-6);
        assert_eq!(e.embed("GROVER, grover!"), e.embed("grover grover"));
        assert!(e.embed("  ... ").iter().all(|x| *x == 0.0));
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn empty_input_and_wrong_dimension() {
        let e = HashingEmbedder::default();
        assert!(embed_chunks(Vec::new(), &e).unwrap().is_empty());

        struct Flaky;
        impl Embedder for Flaky {
            fn id(&self) -> String {
                "flaky".into()
            }
            fn dimension(&self) -> usize {
                4
            }
            fn embed(&self, text: &str) -> Vec<f32> {
                vec![1.0; if text == "bad" { 3 } else { 4 }]
            }
        }
        let chunk = |t: &str| DocumentChunk {
            id: 0,
            source: "s".into(),
            corpus: Corpus::ApiDocs,
            text: t.into(),
            embedding: Vec::new(),
        };
        let err = embed_chunks(vec![chunk("ok"), chunk("bad")], &Flaky).unwrap_err();
        assert_eq!(err.kind(), "dimension_mismatch");
    }

    #[test]
    fn cosine_edges() {
        assert!((cosine(&[1.0, 0.0], &[1.0, 0.0]) - 1.0).abs() < 1e-12);
        assert!((cosine(&[1.0, 0.0], &[-1.0, 0.0]) + 1.0).abs() < 1e-12);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 0.0]), 0.0);
    }
}
