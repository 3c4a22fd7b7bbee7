//! Deterministic random streams.
//!
//! Every simulation draws from ChaCha8 keyed by the run's master seed. Work
//! items get their own stream number, so results do not depend on the order
//! (or thread) in which items are evaluated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Generator for the whole run.
pub fn master(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of the run keyed by `seed`.
pub fn substream(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Packs a (group, item) pair into a stream number.
pub fn stream_id(group: u32, item: u32) -> u64 {
    (u64::from(group) << 32) | u64::from(item)
}
