//! Seed derivation for reproducible experiments.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] keyed by a
//! 64-bit seed. Independent sub-streams are obtained in two ways:
//!
//! * ChaCha's native stream id (`set_stream`) separates draws that belong to
//!   the same object. For a KFJLT operator, stream [`SIGN_STREAM`] produces
//!   the Rademacher factors (factor 1 first, then factor 2, ...) and stream
//!   [`SAMPLE_STREAM`] produces the sampled rows.
//! * [`derive_seed`] hashes a parent seed with a label (for example a trial
//!   index) through the SplitMix64 finalizer, so that per-trial generators do
//!   not depend on how trials are scheduled.
//!
//! Both constructions are pure integer arithmetic and give bit-identical
//! sequences on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SIGN_STREAM: u64 = 0;
pub const SAMPLE_STREAM: u64 = 1;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix_finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for `label` under `parent`.
#[inline]
pub fn derive_seed(parent: u64, label: u64) -> u64 {
    let a = splitmix_finalize(parent.wrapping_add(GOLDEN));
    splitmix_finalize(a ^ label.wrapping_mul(GOLDEN).wrapping_add(0x2545_F491_4F6C_DD1D))
}

/// Folds a label path into a seed: `derive_path(s, &[a, b]) == derive_seed(derive_seed(s, a), b)`.
pub fn derive_path(parent: u64, path: &[u64]) -> u64 {
    path.iter().fold(parent, |acc, &label| derive_seed(acc, label))
}

/// Generator for `seed` positioned at ChaCha stream `stream`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Labels used when deriving named sub-seeds from a master seed.
pub mod labels {
    pub const POINTS: u64 = 0x5054_5301;
    pub const TRIALS: u64 = 0x5452_4c01;
    pub const SUBSPACES: u64 = 0x5355_4201;
    pub const BOOTSTRAP: u64 = 0x424f_4f01;
    pub const RESTARTS: u64 = 0x5253_5401;
    pub const PAIRS: u64 = 0x5041_4901;
}

/// Uniform `+1.0` / `-1.0`.
#[inline]
pub fn rademacher<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

/// Vector of `len` independent Rademacher signs.
pub fn rademacher_vec<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| rademacher(rng)).collect()
}

/// Vector of `len` independent standard normals.
pub fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    use rand_distr::StandardNormal;
    (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Gaussian vector scaled to unit Euclidean norm.
pub fn unit_gaussian_vec<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    loop {
        let mut v = gaussian_vec(rng, len);
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|a| *a /= norm);
            return v;
        }
    }
}
