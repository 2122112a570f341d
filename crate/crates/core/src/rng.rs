//! Seeded random streams.
//!
//! All randomness in the crate goes through [`Stream`], so generated
//! instances can be reproduced bit-for-bit by any implementation that
//! follows the same recipe:
//!
//! * A stream is identified by `(master, tag, index)`. Its 32-byte ChaCha20
//!   key is four consecutive SplitMix64 outputs, little-endian, with the
//!   SplitMix64 state initialised to
//!   `master ^ (tag * 0x9E3779B97F4A7C15) ^ (index * 0xD1B54A32D192ED03)`
//!   (wrapping arithmetic).
//! * Uniform doubles are `(next_u64 >> 11) * 2^-53`, in `[0, 1)`.
//! * Standard normals use Box-Muller on two uniforms `u1, u2`:
//!   `sqrt(-2 ln(1 - u1)) * cos(2 pi u2)`. One normal consumes two uniforms.
//! * Uniform indices in `0..n` use Lemire-free rejection: draw `next_u64`,
//!   reject values `>= u64::MAX - u64::MAX % n`, return `value % n`.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

/// Stream tags used across the crate.
pub mod tag {
    pub const TOPOLOGY: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const INITIAL_POINT: u64 = 3;
    pub const CLUSTER_HEADS: u64 = 4;
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub struct Stream {
    rng: ChaCha20Rng,
}

impl Stream {
    pub fn new(master: u64, tag: u64, index: u64) -> Self {
        let mut state = master
            ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15)
            ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        Self { rng: ChaCha20Rng::from_seed(key) }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * (1.0 - u1).ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0);
        let n = n as u64;
        let zone = u64::MAX - u64::MAX % n;
        loop {
            let v = self.next_u64();
            if v < zone {
                return (v % n) as usize;
            }
        }
    }

    /// `k` distinct values from `0..n`, in draw order (partial Fisher-Yates).
    pub fn sample_without_replacement(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.index(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}
