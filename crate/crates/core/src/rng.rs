//! Reproducible random streams.
//!
//! Every experiment takes a master seed. Trial `i` draws from ChaCha stream
//! `i` keyed by the master seed, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type StreamRng = ChaCha12Rng;

/// Generator for stream `stream` under `master_seed`.
pub fn stream(master_seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Seed for a sub-experiment, derived from a master seed and a label.
pub fn derive_seed(master_seed: u64, label: u64) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = master_seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
