use super::{Document, DocumentChunk, RagError};

pub const DEFAULT_CHUNK_SIZE: usize = 1000;
pub const DEFAULT_OVERLAP: usize = 200;

/// Character windows of `chunk_size` advancing by `chunk_size - overlap`,
/// keeping the final short window. Ids run densely across all documents.
pub fn chunk_corpus(documents: &[Document], chunk_size: usize, overlap: usize) -> Result<Vec<DocumentChunk>, RagError> {
    if chunk_size == 0 || overlap >= chunk_size {
        return Err(RagError::InvalidParams(format!(
            "need chunk_size > overlap >= 0, got chunk_size={chunk_size} overlap={overlap}"
        )));
    }
    let step = chunk_size - overlap;
    let mut out = Vec::new();
    for doc in documents {
        // byte offset of every char boundary, plus the end
        let bounds: Vec<usize> = doc.text.char_indices().map(|(i, _)| i).chain([doc.text.len()]).collect();
        let len = bounds.len() - 1;
        let mut start = 0;
        while start < len {
            let end = (start + chunk_size).min(len);
            out.push(DocumentChunk {
                id: out.len() as u32,
                source: doc.path.clone(),
                corpus: doc.corpus,
                text: doc.text[bounds[start]..bounds[end]].to_string(),
                embedding: Vec::new(),
            });
            if end == len {
                break;
            }
            start += step;
        }
    }
    Ok(out)
}

/// Inverse of chunking for one document's chunks, in order.
pub fn reassemble(chunks: &[&str], overlap: usize) -> String {
    let mut out = String::new();
    for (i, c) in chunks.iter().enumerate() {
        if i == 0 {
            out.push_str(c);
        } else {
            out.extend(c.chars().skip(overlap));
        }
    }
    out
}
