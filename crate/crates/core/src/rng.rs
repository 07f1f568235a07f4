//! Explicit, seedable randomness.
//!
//! Every randomized operation in the crate takes an RNG argument; nothing
//! reaches for a global or thread-local generator. Parallel trial loops derive
//! one independent stream per trial index with [`SeededRng::stream`], so
//! results do not depend on how trials are scheduled across threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

#[derive(Clone, Debug)]
pub struct SeededRng(ChaCha12Rng);

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha12Rng::seed_from_u64(seed))
    }

    /// Independent stream `index` under the same seed.
    pub fn stream(seed: u64, index: u64) -> Self {
        let mut inner = ChaCha12Rng::seed_from_u64(seed);
        inner.set_stream(index);
        Self(inner)
    }

    /// Derives a child generator and advances `self`.
    pub fn split(&mut self) -> Self {
        let mut seed = <ChaCha12Rng as SeedableRng>::Seed::default();
        self.0.fill_bytes(&mut seed);
        Self(ChaCha12Rng::from_seed(seed))
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.0.try_fill_bytes(dest)
    }
}
