//! Seeded generators for channel coefficients and generic sample points.
//!
//! The bit stream is ChaCha20 (`rand_chacha::ChaCha20Rng`, seeded with
//! `SeedableRng::seed_from_u64`). Uniforms take the top 53 bits of each 64-bit
//! word. A complex standard normal `(n1 + i n2) / sqrt(2)` is produced from
//! one Box-Muller pair of uniforms `(u1, u2)`, `u1` in `(0, 1]`:
//!
//! ```text
//! r  = sqrt(-2 ln u1)
//! n1 = r cos(2 pi u2),  n2 = r sin(2 pi u2)
//! ```
//!
//! Transcendentals come from the pure-Rust `libm` crate so that realizations
//! are bitwise reproducible across platforms.
//!
//! Generator version: `chacha20-boxmuller-v1`.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::linalg::C64;

/// Identifier recorded in outputs that depend on the generator.
pub const GENERATOR_VERSION: &str = "chacha20-boxmuller-v1";

#[derive(Debug, Clone)]
pub struct ComplexNormal {
    rng: ChaCha20Rng,
}

impl ComplexNormal {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha20Rng::seed_from_u64(seed) }
    }

    /// Uniform in `[0, 1)` with 53 bits of resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Circularly-symmetric complex normal with `E|z|^2 = 1`.
    pub fn sample(&mut self) -> C64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let theta = 2.0 * std::f64::consts::PI * u2;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        C64::new(r * libm::cos(theta) * s, r * libm::sin(theta) * s)
    }

    pub fn sample_vec(&mut self, n: usize) -> Vec<C64> {
        (0..n).map(|_| self.sample()).collect()
    }
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic child seed for stream `index` under `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(mix64(seed) ^ index.wrapping_mul(0xd1b5_4a32_d192_ed03))
}
