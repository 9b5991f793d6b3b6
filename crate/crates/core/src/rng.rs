//! Reproducible random streams.
//!
//! Every random quantity in the crate is drawn from a [`RngStream`], a
//! `(seed, stream)` pair backed by a ChaCha8 generator. Replications,
//! bootstrap resamples and fold splits derive child streams with
//! [`RngStream::child`], so results never depend on execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    seed: u64,
    stream: u64,
}

impl RngStream {
    pub const fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub const fn seed(&self) -> u64 {
        self.seed
    }

    pub const fn stream(&self) -> u64 {
        self.stream
    }

    /// A stream keyed by `index` below this one. Children of distinct
    /// indices (and of distinct parents) get distinct stream ids.
    pub fn child(&self, index: u64) -> Self {
        let mixed = mix64(self.stream ^ mix64(index.wrapping_add(0x632B_E59B_D9B4_E019)));
        Self {
            seed: self.seed,
            stream: mixed,
        }
    }

    /// Child stream for a path of indices, e.g. `[replication, resample, split]`.
    pub fn derive(&self, path: &[u64]) -> Self {
        path.iter().fold(*self, |s, &i| s.child(i))
    }

    /// Fresh generator positioned at the start of the stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
