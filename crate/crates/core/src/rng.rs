//! SplitMix64, used for every random draw in the crate.
//!
//! The generator is fully specified here so that fixtures can be reproduced
//! bit for bit in any language:
//!
//! ```text
//! state = state + 0x9E3779B97F4A7C15            (wrapping)
//! z = state
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9      (wrapping)
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB      (wrapping)
//! return z ^ (z >> 31)
//! ```
//!
//! Uniforms in (0, 1) are `((next >> 11) + 0.5) / 2^53`; Rayleigh samples
//! use the inverse CDF `sigma * sqrt(-2 ln u)`.

use crate::math;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform on the open interval (0, 1).
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_open01()
    }

    pub fn rayleigh(&mut self, sigma: f64) -> f64 {
        sigma * math::sqrt(-2.0 * math::ln(self.next_open01()))
    }

    /// Standard normal via Box–Muller (one draw per call).
    pub fn normal(&mut self) -> f64 {
        let u = self.next_open01();
        let v = self.next_open01();
        math::sqrt(-2.0 * math::ln(u)) * math::cos(core::f64::consts::TAU * v)
    }
}

/// Derives an independent stream seed from a base seed and a stream index.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    SplitMix64::new(seed ^ stream.wrapping_mul(0xD1B5_4A32_D192_ED03)).next_u64()
}
