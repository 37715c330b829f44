use rand::Rng;
use serde::{Deserialize, Serialize};

use super::TrainChunk;

/// Infilling sentinels, laid out prefix, suffix, middle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FimSentinels {
    pub prefix: String,
    pub suffix: String,
    pub middle: String,
}

impl Default for FimSentinels {
    fn default() -> Self {
        FimSentinels {
            prefix: "<fim_prefix>".into(),
            suffix: "<fim_suffix>".into(),
            middle: "<fim_middle>".into(),
        }
    }
}

/// Rewrites the chunk around char cut points `i <= j`:
/// prefix + text[..i] + suffix + text[j..] + middle + text[i..j].
pub fn fim_with_cuts(chunk: &TrainChunk, i: usize, j: usize, sentinels: &FimSentinels) -> TrainChunk {
    let bounds: Vec<usize> = chunk.text.char_indices().map(|(b, _)| b).chain([chunk.text.len()]).collect();
    let (i, j) = (i.min(j), j.max(i));
    let (bi, bj) = (bounds[i.min(bounds.len() - 1)], bounds[j.min(bounds.len() - 1)]);
    let t = &chunk.text;
    TrainChunk {
        text: format!("{}{}{}{}{}{}", sentinels.prefix, &t[..bi], sentinels.suffix, &t[bj..], sentinels.middle, &t[bi..bj]),
        fim_applied: true,
        ..chunk.clone()
    }
}

/// With probability `fim_rate`, rewrites the chunk at two uniform cut points;
/// otherwise returns it unchanged. Already rewritten chunks are left alone.
pub fn fim_transform<R: Rng + ?Sized>(chunk: &TrainChunk, rng: &mut R, fim_rate: f64, sentinels: &FimSentinels) -> TrainChunk {
    assert!((0.0..=1.0).contains(&fim_rate), "fim_rate must lie in [0, 1]");
    if chunk.fim_applied || rng.random::<f64>() >= fim_rate {
        return chunk.clone();
    }
    let len = chunk.text.chars().count();
    let a = rng.random_range(0..=len);
    let b = rng.random_range(0..=len);
    fim_with_cuts(chunk, a, b, sentinels)
}

/// Original text of a rewritten chunk, or None if the layout is not found.
pub fn fim_invert(text: &str, sentinels: &FimSentinels) -> Option<String> {
    let rest = text.strip_prefix(sentinels.prefix.as_str())?;
    let s = rest.find(sentinels.suffix.as_str())?;
    let prefix = &rest[..s];
    let rest = &rest[s + sentinels.suffix.len()..];
    let m = rest.rfind(sentinels.middle.as_str())?;
    let (suffix, middle) = (&rest[..m], &rest[m + sentinels.middle.len()..]);
    Some(format!("{prefix}{middle}{suffix}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chunk(text: &str) -> TrainChunk {
        TrainChunk {
            text: text.into(),
            source: "s".into(),
            fim_applied: false,
            official: false,
        }
    }

    #[test]
    fn forced_cuts() {
        let out = fim_with_cuts(&chunk("abcdef"), 2, 4, &FimSentinels::default());
        assert_eq!(out.text, "<fim_prefix>ab<fim_suffix>ef<fim_middle>cd");
        assert!(out.fim_applied);
        assert_eq!(fim_invert(&out.text, &FimSentinels::default()).unwrap(), "abcdef");
    }

    #[test]
    fn multibyte_cuts() {
        let out = fim_with_cuts(&chunk("αβγ"), 1, 2, &FimSentinels::default());
        assert_eq!(out.text, "<fim_prefix>α<fim_suffix>γ<fim_middle>β");
    }

    #[test]
    fn zero_and_one_rates() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = chunk("some text");
        for _ in 0..100 {
            assert_eq!(fim_transform(&c, &mut rng, 0.0, &FimSentinels::default()), c);
            assert!(fim_transform(&c, &mut rng, 1.0, &FimSentinels::default()).fim_applied);
        }
    }

    #[test]
    fn invert_rejects_plain_text() {
        assert!(fim_invert("abc", &FimSentinels::default()).is_none());
    }
}
