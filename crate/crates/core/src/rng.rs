//! Seeded random streams.
//!
//! Every stream is a ChaCha20 generator keyed by the run seed, with the
//! stream id derived from a list of tags. Streams with different tags are
//! independent, so sub-tasks can be evaluated in any order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub mod tag {
    pub const LEMMA_A1: u64 = 0x11;
    pub const LEMMA_A2: u64 = 0x12;
    pub const LEMMA_A3: u64 = 0x13;
    pub const LEMMA_RADIAL: u64 = 0x14;
    pub const LEMMA_FRAME: u64 = 0x15;
    pub const CONFIG: u64 = 0x21;
    pub const PACK: u64 = 0x22;
    pub const GAUGE: u64 = 0x23;
    pub const SCALAR: u64 = 0x24;
    pub const TANGENT: u64 = 0x25;
    pub const IDENTITY: u64 = 0x31;
    pub const SOLVE: u64 = 0x41;
    pub const MANUFACTURED: u64 = 0x42;
    pub const CONVERGENCE: u64 = 0x51;
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent generator for `(seed, tags)`.
pub fn stream(seed: u64, tags: &[u64]) -> ChaCha20Rng {
    let mut id = 0x5657_4c41_4255_u64;
    for &t in tags {
        id = splitmix(id ^ t);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Derived 64-bit seed for a sub-task.
pub fn subseed(seed: u64, tags: &[u64]) -> u64 {
    stream(seed, tags).gen()
}

/// Uniform sample in `[lo, hi)`.
pub fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..hi)
}
