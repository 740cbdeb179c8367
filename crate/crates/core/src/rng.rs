//! Seeded Gaussian noise streams.
//!
//! Every noise role (initial state, process noise, observation noise,
//! channel noise) draws from its own ChaCha stream derived from the run seed,
//! so the streams never overlap and each one is reproducible on its own.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum NoiseRole {
    InitialState = 0,
    Process = 1,
    Observation = 2,
    Channel = 3,
}

#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(seed: u64, role: NoiseRole) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(role as u64);
        Self { rng }
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.standard_normal();
        }
    }
}
