//! Seeded deterministic sampling helpers.
//!
//! Every stochastic operation in this crate draws from ChaCha streams so that
//! identical seeds reproduce identical outputs regardless of platform or
//! execution order. Distribution sampling uses explicit inverse-CDF and
//! Box-Muller forms to keep the sampled streams stable across dependency
//! upgrades.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// PRNG for a seed.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream derived from (seed, stream); used for per-pixel noise
/// so results do not depend on pixel processing order.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw in the open interval (0, 1).
///
/// 53 mantissa bits offset by half an ulp, so both endpoints are excluded and
/// downstream logarithms stay finite.
pub fn uniform_open01<R: RngCore>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Exponential sojourn sample with the given rate, by inverse CDF.
///
/// A non-positive rate models an absorbing state and yields +inf.
pub fn exponential<R: RngCore>(rng: &mut R, rate: f64) -> f64 {
    if rate <= 0.0 {
        return f64::INFINITY;
    }
    -(1.0 - uniform_open01(rng)).ln() / rate
}

/// Standard normal sample via Box-Muller.
pub fn standard_normal<R: RngCore>(rng: &mut R) -> f64 {
    let u1 = uniform_open01(rng);
    let u2 = uniform_open01(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
