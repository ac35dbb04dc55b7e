//! Seeded, splittable random number streams.
//!
//! Every sampler in the crate takes an [`RngState`] by value and builds its
//! own ChaCha8 generator from it. ChaCha exposes 2^64 independent streams per
//! key, so `(seed, stream)` identifies a sequence that does not depend on
//! thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Golden-ratio increment used by splitmix64.
const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngState {
    pub seed: u64,
    pub stream: u64,
}

impl RngState {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn from_seed(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    /// Same seed, different stream.
    pub fn with_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    /// Child state for block `index` of a partitioned computation. The child
    /// keeps the stream id and re-keys the seed, so blocks never overlap with
    /// each other or with the parent.
    pub fn block(self, index: u64) -> Self {
        Self {
            seed: splitmix64(self.seed ^ splitmix64(index.wrapping_add(1).wrapping_mul(GOLDEN))),
            stream: self.stream,
        }
    }

    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

pub(crate) fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
