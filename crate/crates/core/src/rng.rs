//! Deterministic random streams.
//!
//! Every draw in the workspace flows through [`RngStream`], a thin wrapper
//! around the ChaCha8 counter-based generator. A stream is fully specified
//! by a 64-bit seed and a 64-bit stream index, so the same pair reproduces
//! the same draw sequence on every platform. Streams with distinct indices
//! never share state, which is what lets seeds/matches run independently.
//!
//! The derived draw operations (`next_f64`, `below`, `permutation`) are
//! implemented here on top of raw 64-bit output so the exact algorithms are
//! pinned by this crate rather than by a dependency's internals.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct RngStream {
    inner: ChaCha8Rng,
}

impl RngStream {
    /// Stream 0 for the given seed.
    pub fn new(seed: u64) -> Self {
        Self::derived(seed, 0)
    }

    /// Independent stream `stream_index` of the generator seeded with
    /// `master_seed`. This is the only sanctioned way to split randomness
    /// across seeds, matches, or workers.
    pub fn derived(master_seed: u64, stream_index: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream(stream_index);
        RngStream { inner }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, n). Uses the widening-multiply reduction,
    /// whose bias (~n / 2^64) is irrelevant at the ranges used here.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0) is meaningless");
        ((u128::from(self.next_u64()) * u128::from(n)) >> 64) as u64
    }

    /// Bernoulli draw; always consumes exactly one f64 draw.
    pub fn chance(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            xs.swap(i, j);
        }
    }

    /// Uniform random permutation of 0..n.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut xs: Vec<usize> = (0..n).collect();
        self.shuffle(&mut xs);
        xs
    }
}
