//! Seed-stream derivation.
//!
//! Every sampling consumer owns its own RNG, derived from the master seed
//! and a label, so adding a consumer never perturbs the draws of another.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::tensor::Tensor;

/// Injectable Gaussian noise: seeded draws for real runs, zeros for the
/// exactness tests that require the stochastic terms switched off.
pub enum NoiseSource<'a> {
    Seeded(&'a mut ChaCha12Rng),
    Zero,
}

impl NoiseSource<'_> {
    pub fn standard_normal(&mut self, rows: usize, cols: usize) -> Tensor {
        match self {
            NoiseSource::Seeded(rng) => Tensor::randn(*rng, vec![rows, cols], 1.0),
            NoiseSource::Zero => Tensor::zeros(vec![rows, cols]),
        }
    }
}

/// Deterministic child RNG for (seed, label, index).
pub fn substream(seed: u64, label: &str, index: u64) -> ChaCha12Rng {
    // FNV-1a over the label keeps derivation dependency-free and stable.
    let mut h: u64 = 0xcbf29ce484222325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    ChaCha12Rng::seed_from_u64(
        seed.wrapping_mul(0x9e3779b97f4a7c15)
            .wrapping_add(h)
            .wrapping_add(index.wrapping_mul(0x2545f4914f6cdd1d)),
    )
}
