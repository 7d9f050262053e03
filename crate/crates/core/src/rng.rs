//! Seed derivation. Every randomized step draws from a generator keyed by
//! `(run seed, stream, index)` so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Mixes a run seed with a stream tag and an index into a fresh 64-bit seed.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(stream)) ^ index)
}

pub fn rng_for(seed: u64, stream: u64, index: u64) -> Rng {
    Rng::seed_from_u64(derive_seed(seed, stream, index))
}

pub(crate) mod streams {
    pub const INIT_RANDOM: u64 = 1;
    pub const FILL: u64 = 2;
    pub const DIVISION: u64 = 3;
    pub const LSH: u64 = 4;
    pub const RP_TREE: u64 = 5;
    pub const SW: u64 = 6;
    pub const HNSW: u64 = 7;
    pub const REVERSE_SHUFFLE: u64 = 8;
    pub const SAMPLED_QUERIES: u64 = 9;
}
