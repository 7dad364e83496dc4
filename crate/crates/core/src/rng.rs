//! Reproducible random streams.
//!
//! Every random draw is keyed by `(seed, stream, position)`: the master seed
//! selects the ChaCha key, the stream separates chains and replicates, and
//! the position lets a chain jump straight to the block reserved for a given
//! step.  Parallel workers therefore never share generator state and results
//! do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// 32-bit words reserved for each chain step.
const WORDS_PER_STEP: u128 = 256;

/// Generator for stream `stream` under `seed`, positioned at its start.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream used by the steps of chain `chain`.
pub fn chain_stream(chain: u64) -> u64 {
    chain << 1
}

/// Stream used to draw the initial state of chain `chain`.
pub fn chain_init_stream(chain: u64) -> u64 {
    (chain << 1) | 1
}

/// Position `rng` at the block reserved for `step`.
pub fn seek_step(rng: &mut ChaCha8Rng, step: u64) {
    rng.set_word_pos(step as u128 * WORDS_PER_STEP);
}
