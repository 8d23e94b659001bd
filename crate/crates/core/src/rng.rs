//! Seed derivation for reproducible ensembles.
//!
//! Every run draws from a ChaCha8 stream whose 64-bit seed is a SplitMix64
//! hash of the master seed and the run coordinates, so ensembles are
//! independent of scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream id for organic (Hawkes) proposals.
pub const ORGANIC_STREAM: u64 = 0;
/// Stream id for incentivized (control) proposals.
pub const CONTROL_STREAM: u64 = 1;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with an ordered list of coordinates.
pub fn derive_seed(master: u64, coords: &[u64]) -> u64 {
    coords.iter().fold(splitmix64(master), |acc, &c| splitmix64(acc ^ splitmix64(c)))
}

/// Seed of run `run_index` in an ensemble started from `master`.
pub fn run_seed(master: u64, run_index: u64) -> u64 {
    derive_seed(master, &[run_index])
}

/// Generator for one logical stream of a run.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
