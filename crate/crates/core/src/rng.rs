//! Portable random stream for the synthetic harness.
//!
//! ChaCha8 keyed with the seed as a little-endian `u64` in the first 8 key
//! bytes (remaining 24 bytes zero), stream number = scene index, word
//! position 0. Derived draws:
//!
//! - `uniform()`: `(next_u64 >> 11) · 2⁻⁵³`, in `[0, 1)`
//! - `normal()`: Box–Muller cosine branch with `u1 = 1 − uniform()` and
//!   `u2 = uniform()`, i.e. `sqrt(−2 ln u1) · cos(2π u2)`; two uniforms per call
//! - `bernoulli(p)`: `uniform() < p`
//! - `int_inclusive(lo, hi)`: `lo + floor(uniform() · (hi − lo + 1))`
//!
//! Reimplementations that follow these rules reproduce the harness files
//! byte for byte.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct SplitRng {
    inner: ChaCha8Rng,
}

impl SplitRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        let mut inner = ChaCha8Rng::from_seed(key);
        inner.set_stream(stream);
        inner.set_word_pos(0);
        Self { inner }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn int_inclusive(&mut self, lo: u32, hi: u32) -> u32 {
        let span = f64::from(hi - lo) + 1.0;
        lo + ((self.uniform() * span).floor() as u32).min(hi - lo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4)
            .map({
                let mut r = SplitRng::new(7, 0);
                move |_| r.next_u64()
            })
            .collect();
        let b: Vec<u64> = (0..4)
            .map({
                let mut r = SplitRng::new(7, 0);
                move |_| r.next_u64()
            })
            .collect();
        let mut other = SplitRng::new(7, 1);
        assert_eq!(a, b);
        assert_ne!(a[0], other.next_u64());
    }

    #[test]
    fn draws_stay_in_range() {
        let mut r = SplitRng::new(0, 3);
        for _ in 0..10_000 {
            let u = r.uniform();
            assert!((0.0..1.0).contains(&u));
            assert!(r.normal().is_finite());
            assert!(r.int_inclusive(2, 4) <= 4);
        }
        assert!(!r.bernoulli(0.0));
        assert!(r.bernoulli(1.0));
    }

    #[test]
    fn normal_moments_are_plausible() {
        let mut r = SplitRng::new(42, 0);
        let xs: Vec<f64> = (0..20_000).map(|_| r.normal()).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 0.03, "{mean}");
        assert!((var - 1.0).abs() < 0.05, "{var}");
    }
}
