//! Seed derivation and normal sampling.
//!
//! Every random draw in the crate comes from a ChaCha8 generator whose key is
//! a 64-bit seed and whose stream id is chosen by the caller. Sub-seeds are
//! derived with splitmix64 mixing, so `(seed, path...)` names a unique,
//! schedule-independent generator. Rows of a generated data set each get
//! their own stream (`row_rng(seed, row)`), which makes results identical for
//! any thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` and a path of integers.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Generator keyed by `seed`, positioned at the start of `stream`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generator for row `row` of a data set keyed by `seed`.
pub fn row_rng(seed: u64, row: u64) -> ChaCha8Rng {
    stream_rng(seed, row)
}

/// Standard normal via Box-Muller; consumes exactly two uniforms.
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // 1 - U lies in (0, 1], so the log is finite
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
