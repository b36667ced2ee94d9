//! Seed derivation.
//!
//! Every random quantity is drawn from a ChaCha8 stream keyed by
//! `(master seed, index)` and selected by a [`Purpose`]. Channel draws, noise
//! and symbols therefore never share a stream, and trial `t` of a Monte Carlo
//! run sees the same numbers whether trials run sequentially or in parallel.

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Independent stream families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Channel = 1,
    Noise = 2,
    Symbols = 3,
    Trial = 4,
    ExactChannel = 5,
}

/// A generator for `(master, purpose, index)`.
pub fn stream(master: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master.to_le_bytes());
    key[8..16].copy_from_slice(&index.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(purpose as u64);
    rng
}

/// Seed of the `trial`-th trial of a run keyed by `master`.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    stream(master, Purpose::Trial, trial).next_u64()
}

/// Circularly-symmetric complex Gaussian with variance `variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn purposes_do_not_collide() {
        let a = stream(7, Purpose::Channel, 0).next_u64();
        let b = stream(7, Purpose::Noise, 0).next_u64();
        let c = stream(7, Purpose::Channel, 1).next_u64();
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, stream(7, Purpose::Channel, 0).next_u64());
    }

    #[test]
    fn gaussian_variance() {
        let mut rng = stream(1, Purpose::Symbols, 0);
        let n = 200_000;
        let mean_power: f64 =
            (0..n).map(|_| complex_gaussian(&mut rng, 2.5).norm_sqr()).sum::<f64>() / n as f64;
        assert!((mean_power - 2.5).abs() < 0.05, "{mean_power}");
    }
}
