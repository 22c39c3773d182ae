//! Seeded, stream-addressable randomness shared by every simulation component.
//!
//! A stream is identified by `(seed, stream_id)`; the same pair always yields the
//! same sequence of draws, independent of thread scheduling.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Stream ids reserved for the distinct random sources of one replication.
pub mod streams {
    /// Noise and policy-internal sampling.
    pub const POLICY: u64 = 0;
    /// Per-round action sets of contextual environments.
    pub const CONTEXT: u64 = 1;
    /// Instance generation (subsampling, random parameters).
    pub const INSTANCE: u64 = 2;
}

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        rand::Rng::random::<f64>(&mut self.inner)
    }

    pub fn below(&mut self, bound: usize) -> usize {
        rand::Rng::random_range(&mut self.inner, 0..bound)
    }

    /// `k ≤ 64` uniformly random low bits.
    pub fn next_bits(&mut self, k: usize) -> u64 {
        let v = self.inner.next_u64();
        if k >= 64 {
            v
        } else {
            v & ((1u64 << k) - 1)
        }
    }

    pub fn sign(&mut self) -> f64 {
        if rand::Rng::random::<bool>(&mut self.inner) {
            1.0
        } else {
            -1.0
        }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
