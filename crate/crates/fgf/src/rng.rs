//! Seeded, stream-keyed random number generation.
//!
//! Every (sample, mode) pair draws from its own counter-based stream, so
//! samples are bit-identical however the work is scheduled.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Generator seeded from a u64 (little-endian bytes, zero-padded).
pub fn root_rng(seed: u64) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    ChaCha8Rng::from_seed(bytes)
}

/// Stream `sample_idx * 2^32 + slot` of the seeded generator. `slot` is a
/// mode index for torus samplers and a small fixed id for lattice draws.
pub fn stream_rng(seed: u64, sample_idx: u64, slot: u64) -> ChaCha8Rng {
    debug_assert!(slot < 1 << 32, "stream slot must fit in 32 bits");
    let mut rng = root_rng(seed);
    rng.set_stream((sample_idx << 32) | (slot & 0xFFFF_FFFF));
    rng
}

/// One standard normal draw.
pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Standard complex Gaussian `CN(0,1)`: real and imaginary parts are
/// independent `N(0, 1/2)`; drawn real part first.
pub fn complex_standard(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}
