//! Seeded random number generation with a fully specified algorithm, so a
//! run can be reproduced bit for bit from its seed in any language.
//!
//! The core is PCG32 (XSH-RR output over a 64-bit linear congruential
//! state):
//!
//! ```text
//! state' = state * 6364136223846793005 + inc            (mod 2^64)
//! xorshifted = (((state >> 18) ^ state) >> 27) as u32
//! rot = (state >> 59) as u32
//! output = xorshifted.rotate_right(rot)                 (computed from the old state)
//! ```
//!
//! Seeding follows the reference `pcg32_srandom(seed, 0xda3e39cb94b95bdb)`:
//! `inc = (stream << 1) | 1`, `state = 0`, step, `state += seed`, step.
//!
//! Derived draws:
//! - `next_u64`: high word from the first `next_u32`, low word from the second.
//! - `next_f64`: `(next_u64 >> 11) * 2^-53`, uniform on `[0, 1)`.
//! - `below(n)`: `floor(next_f64() * n)`.
//! - `normal`: Box–Muller cosine branch, `sqrt(-2 ln(1 - u1)) cos(2π u2)`.
//! - `poisson(λ)`: Knuth's product method for `λ < 10`, Hörmann's PTRS
//!   transformed rejection otherwise.

const MULTIPLIER: u64 = 6_364_136_223_846_793_005;
const DEFAULT_STREAM: u64 = 0xda3e_39cb_94b9_5bdb;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pcg32 {
    state: u64,
    inc: u64,
}

impl Pcg32 {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, DEFAULT_STREAM)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = Self {
            state: 0,
            inc: (stream << 1) | 1,
        };
        rng.next_u32();
        rng.state = rng.state.wrapping_add(seed);
        rng.next_u32();
        rng
    }

    pub fn next_u32(&mut self) -> u32 {
        let old = self.state;
        self.state = old.wrapping_mul(MULTIPLIER).wrapping_add(self.inc);
        let xorshifted = (((old >> 18) ^ old) >> 27) as u32;
        let rot = (old >> 59) as u32;
        xorshifted.rotate_right(rot)
    }

    pub fn next_u64(&mut self) -> u64 {
        let hi = self.next_u32() as u64;
        let lo = self.next_u32() as u64;
        (hi << 32) | lo
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        ((self.next_f64() * n as f64) as usize).min(n - 1)
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn poisson(&mut self, lambda: f64) -> u64 {
        if !(lambda > 0.0) {
            return 0;
        }
        if lambda < 10.0 {
            let limit = (-lambda).exp();
            let mut k = 0u64;
            let mut prod = self.next_f64();
            while prod > limit {
                k += 1;
                prod *= self.next_f64();
            }
            return k;
        }
        let slam = lambda.sqrt();
        let loglam = lambda.ln();
        let b = 0.931 + 2.53 * slam;
        let a = -0.059 + 0.02483 * b;
        let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        let vr = 0.9277 - 3.6224 / (b - 2.0);
        loop {
            let u = self.next_f64() - 0.5;
            let v = self.next_f64();
            let us = 0.5 - u.abs();
            let k = ((2.0 * a / us + b) * u + lambda + 0.43).floor();
            if us >= 0.07 && v <= vr {
                return k as u64;
            }
            if k < 0.0 || (us < 0.013 && v > us) {
                continue;
            }
            let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
            let rhs = -lambda + k * loglam - libm::lgamma(k + 1.0);
            if lhs <= rhs {
                return k as u64;
            }
        }
    }

    /// Fisher–Yates, walking from the back.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_pcg32_vector() {
        // First outputs of the reference pcg32-demo with seed 42, stream 54.
        let mut rng = Pcg32::with_stream(42, 54);
        let got: Vec<u32> = (0..6).map(|_| rng.next_u32()).collect();
        assert_eq!(
            got,
            [0xa15c02b7, 0x7b47f409, 0xba1d3330, 0x83d2f293, 0xbfa4784b, 0xcbed606e]
        );
    }

    #[test]
    fn uniform_range() {
        let mut rng = Pcg32::new(1);
        for _ in 0..10_000 {
            let x = rng.next_f64();
            assert!((0.0..1.0).contains(&x));
            assert!(rng.below(7) < 7);
        }
    }

    fn moments(samples: &[f64]) -> (f64, f64) {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn normal_moments() {
        let mut rng = Pcg32::new(3);
        let s: Vec<f64> = (0..100_000).map(|_| rng.normal()).collect();
        let (m, v) = moments(&s);
        assert!(m.abs() < 0.02, "{m}");
        assert!((v - 1.0).abs() < 0.02, "{v}");
    }

    #[test]
    fn poisson_moments() {
        let mut rng = Pcg32::new(9);
        for lambda in [0.3, 4.0, 12.0, 250.0] {
            let s: Vec<f64> = (0..50_000).map(|_| rng.poisson(lambda) as f64).collect();
            let (m, v) = moments(&s);
            let se = (lambda / 50_000f64).sqrt();
            assert!((m - lambda).abs() < 5.0 * se, "mean {m} for {lambda}");
            assert!((v / lambda - 1.0).abs() < 0.05, "var {v} for {lambda}");
        }
        assert_eq!(rng.poisson(0.0), 0);
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut v: Vec<usize> = (0..50).collect();
        Pcg32::new(11).shuffle(&mut v);
        let mut s = v.clone();
        s.sort();
        assert_eq!(s, (0..50).collect::<Vec<_>>());
        assert_ne!(v, s);
    }
}
