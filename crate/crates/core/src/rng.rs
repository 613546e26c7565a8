//! Seeded random streams.
//!
//! Every stream is a ChaCha8 generator addressed by `(seed, stream)`. ChaCha is
//! counter based, so a replicate's draws depend only on its own address and
//! never on how many replicates ran before it or on which thread.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// The random stream of replicate `stream` under master `seed`.
pub fn stream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A stream derived from a 64-bit key and a sub-index, used to give each
/// height (or other labelled object) its own independent randomness.
pub fn substream(key: u64, index: u64) -> StreamRng {
    stream(key, index)
}
