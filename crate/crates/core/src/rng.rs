//! The single PRNG used everywhere a layout needs randomness.
//!
//! Generator: xoshiro256++ (Blackman & Vigna). A 64-bit seed is expanded into
//! the 256-bit state with SplitMix64 (increment `0x9e3779b97f4a7c15`, mixing
//! multipliers `0xbf58476d1ce4e5b9` and `0x94d049bb133111eb`), which is what
//! `rand_xoshiro`'s `seed_from_u64` does. Reals in `[0, 1)` take the top 53
//! bits of one output word: `(x >> 11) * 2^-53`. Integers in `[0, n)` use
//! Lemire-style widening multiplication without rejection, which has a bias of
//! at most `n / 2^64` and keeps exactly one draw per call.
//!
//! Everything here is integer arithmetic plus one exact multiply, so streams
//! are identical on every platform.

use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::geometry::Point;

#[derive(Clone, Debug)]
pub struct DetRng {
    inner: Xoshiro256PlusPlus,
}

impl DetRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    /// Derives an independent stream for a named purpose from a base seed.
    pub fn derived(seed: u64, stream: u64) -> Self {
        Self::new(seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[0, n)`. `n` must be non-zero.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Uniformly distributed unit vector.
    pub fn direction(&mut self) -> Point {
        let angle = self.unit() * std::f64::consts::TAU;
        Point::new(angle.cos(), angle.sin())
    }
}
