use super::Retrieved;

pub const CONTEXT_HEADER: &str = "Context:";
/// Replacement for the header text when it occurs inside a chunk.
pub const ESCAPED_HEADER: &str = "Context\\:";

/// Retrieved chunks under a single `Context:` header in rank order, followed by
/// the prompt. With no results the prompt is returned unchanged.
pub fn augment_prompt(prompt: &str, results: &[Retrieved<'_>]) -> String {
    if results.is_empty() {
        return prompt.to_string();
    }
    let mut out = format!("{CONTEXT_HEADER}\n");
    for (rank, hit) in results.iter().enumerate() {
        out.push_str(&format!("[{}] {}\n", rank + 1, hit.chunk.source));
        out.push_str(&hit.chunk.text.replace(CONTEXT_HEADER, ESCAPED_HEADER));
        out.push_str("\n\n");
    }
    out.push_str(prompt);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rag::{Corpus, DocumentChunk};

    fn chunk(id: u32, text: &str) -> DocumentChunk {
        DocumentChunk {
            id,
            source: format!("doc{id}.md"),
            corpus: Corpus::ApiDocs,
            text: text.into(),
            embedding: Vec::new(),
        }
    }

    #[test]
    fn rank_order_then_prompt() {
        let (a, b) = (chunk(0, "alpha text"), chunk(1, "beta text"));
        let hits = [Retrieved { chunk: &b, score: 0.9 }, Retrieved { chunk: &a, score: 0.5 }];
        let out = augment_prompt("Write Grover.", &hits);
        assert!(out.starts_with("Context:\n"));
        let (pb, pa, pp) = (out.find("beta text").unwrap(), out.find("alpha text").unwrap(), out.find("Write Grover.").unwrap());
        assert!(pb < pa && pa < pp);
    }

    #[test]
    fn empty_is_identity() {
        assert_eq!(augment_prompt("p", &[]), "p");
    }

    #[test]
    fn header_in_chunk_is_escaped() {
        let c = chunk(0, "Context: this chunk quotes the header");
        let out = augment_prompt("p", &[Retrieved { chunk: &c, score: 1.0 }]);
        assert_eq!(out.matches("Context:").count(), 1);
        assert!(out.contains("Context\\: this chunk"));
    }
}
