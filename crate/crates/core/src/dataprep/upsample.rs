use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::{token_count, total_tokens, DataprepError, TrainChunk};

pub const DEFAULT_OFFICIAL_WEIGHT: f64 = 3.0;

/// The input followed by duplicates drawn with replacement, official chunks
/// `official_weight` times as likely, until the token count reaches
/// `target_tokens`. Chunks without tokens are never drawn.
pub fn upsample<R: Rng + ?Sized>(
    chunks: &[TrainChunk],
    official_weight: f64,
    target_tokens: usize,
    rng: &mut R,
) -> Result<Vec<TrainChunk>, DataprepError> {
    if chunks.is_empty() {
        return Err(DataprepError::InvalidTarget("no chunks to upsample".into()));
    }
    if !official_weight.is_finite() || official_weight < 1.0 {
        return Err(DataprepError::InvalidArgs(format!("official_weight must be >= 1, got {official_weight}")));
    }
    let mut total = total_tokens(chunks);
    if target_tokens < total {
        return Err(DataprepError::InvalidTarget(format!("target {target_tokens} is below the current {total} tokens")));
    }
    let mut out = chunks.to_vec();
    if total == target_tokens {
        return Ok(out);
    }
    let drawable: Vec<usize> = (0..chunks.len()).filter(|&i| token_count(&chunks[i].text) > 0).collect();
    if drawable.is_empty() {
        return Err(DataprepError::InvalidTarget("no chunk carries any tokens".into()));
    }
    let weights = drawable.iter().map(|&i| if chunks[i].official { official_weight } else { 1.0 });
    let dist = WeightedIndex::new(weights).map_err(|e| DataprepError::InvalidArgs(e.to_string()))?;
    while total < target_tokens {
        let c = &chunks[drawable[dist.sample(rng)]];
        total += token_count(&c.text);
        out.push(c.clone());
    }
    Ok(out)
}
