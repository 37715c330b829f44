//! Named RNG substreams derived from one root seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// 64-bit seed for `(module, purpose)` under `root`.
pub fn substream_seed(root: u64, module: &str, purpose: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(root.to_le_bytes());
    h.update(module.as_bytes());
    h.update([0u8]);
    h.update(purpose.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

pub fn substream(root: u64, module: &str, purpose: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(substream_seed(root, module, purpose))
}
