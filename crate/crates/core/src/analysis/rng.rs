//! Counter-based random streams: sample `i` of a run with seed `s` always
//! draws from the same generator, whatever the thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Generator for sample `index` of the run seeded with `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

const CHUNK: usize = 4096;

/// Evaluates `f(rng_i, i)` for `i in 0..count` in parallel, in index order.
pub fn par_samples<T, F>(count: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
{
    let chunks: Vec<Vec<T>> = (0..count.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            (c * CHUNK..((c + 1) * CHUNK).min(count))
                .map(|i| f(&mut stream(seed, i as u64), i))
                .collect()
        })
        .collect();
    chunks.into_iter().flatten().collect()
}
