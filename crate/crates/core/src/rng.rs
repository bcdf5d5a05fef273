//! Reproducible random streams keyed by `(seed_base, stage, index)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Independent ChaCha stream: the key is the SHA-256 of the seed base and the stage
/// label, the stream number is the path/chain index.
pub fn stream_rng(seed_base: u64, stage: &str, index: u64) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed_base.to_le_bytes());
    h.update(stage.as_bytes());
    let key: [u8; 32] = h.finalize().into();
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Run `task(i, rng_i)` for `i in 0..n` in parallel and return the results in index order.
pub fn par_streams<T, F>(n: usize, seed_base: u64, stage: &str, task: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> Result<T> + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed_base, stage, i as u64);
            task(i, &mut rng)
        })
        .collect()
}
