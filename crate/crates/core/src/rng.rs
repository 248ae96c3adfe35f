//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by the
//! user seed. Independent consumers (one per layer, one per k-means restart,
//! ...) get their own ChaCha *stream* inside that key, so the draws of one
//! consumer never depend on how many values another consumer pulled or on the
//! order in which they ran. The stream id is `mix(tag ^ mix(index))` where
//! `tag` names the consumer kind and `mix` is the SplitMix64 finalizer.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream tags. Values are arbitrary but frozen: changing one changes output.
pub mod tag {
    pub const LAYER: u64 = 0x6c61_7965_7200_0001;
    pub const KMEANS: u64 = 0x6b6d_6561_6e73_0002;
    pub const EIGEN: u64 = 0x6569_6765_6e00_0003;
}

/// SplitMix64 output function.
pub fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Generator for sub-stream `(tag, index)` of `seed`.
pub fn substream(seed: u64, tag: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(mix(tag ^ mix(index)));
    rng
}
