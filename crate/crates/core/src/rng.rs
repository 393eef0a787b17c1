//! Reproducible random substreams.
//!
//! Every random consumer draws from ChaCha20 (`rand_chacha::ChaCha20Rng`)
//! keyed by the 64-bit user seed via `seed_from_u64`, with the ChaCha stream
//! id selecting an independent substream. Work is split into fixed blocks,
//! block `k` always uses stream `k`, so results never depend on how blocks
//! are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Draws per Monte Carlo block.
pub const BLOCK_SIZE: usize = 1 << 16;

/// Stream-id offsets keep the different consumers of one seed apart.
pub(crate) const BOOTSTRAP_STREAM_BASE: u64 = 1 << 48;
pub(crate) const TOMOGRAPHY_STREAM_BASE: u64 = 1 << 40;

pub fn substream(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `(start, len)` ranges of the fixed blocks covering `n` draws.
pub fn blocks(n: usize) -> impl Iterator<Item = (usize, usize)> + Clone {
    (0..n.div_ceil(BLOCK_SIZE)).map(move |b| {
        let start = b * BLOCK_SIZE;
        (start, BLOCK_SIZE.min(n - start))
    })
}
