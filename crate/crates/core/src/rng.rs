//! Per-particle random streams.
//!
//! Each particle owns a ChaCha8 stream selected by `(seed, particle_id)`, so
//! its draws do not depend on how particles are scheduled across threads.
//! Draw 0 of every stream is reserved for the spin-alignment threshold of the
//! event model; the Newtonian engine reads and discards it so both engines
//! see identical initial conditions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub struct ParticleStream {
    rng: ChaCha8Rng,
}

impl ParticleStream {
    pub fn new(seed: u64, particle_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(particle_id);
        Self { rng }
    }

    /// Draw 0: uniform in `[-1/2, 1/2)`. Must be the first call on a fresh stream.
    pub fn alignment_threshold(&mut self) -> f64 {
        debug_assert_eq!(self.rng.get_word_pos(), 0, "alignment draw must come first");
        self.rng.gen::<f64>() - 0.5
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}
