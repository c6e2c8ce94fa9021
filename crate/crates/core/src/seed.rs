//! Deterministic seed derivation.
//!
//! Every random stream is keyed by absolute coordinates (a site, a directed
//! edge, a trial index) so results do not depend on iteration order or on
//! how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream tags. Distinct tags keep independent families apart.
pub mod tag {
    pub const CURE: u64 = 0x43_55_52_45;
    pub const TRANSMISSION: u64 = 0x54_52_41_4e;
    pub const TRIAL: u64 = 0x54_52_49_41;
    pub const FIELD: u64 = 0x46_49_45_4c;
    pub const COLUMN: u64 = 0x43_4f_4c_55;
    pub const PATH: u64 = 0x50_41_54_48;
    pub const COUPLING: u64 = 0x43_4f_55_50;
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed, a stream tag and a key path.
pub fn derive_seed(master: u64, tag: u64, key: &[i64]) -> u64 {
    let mut h = mix64(master ^ mix64(tag));
    for &k in key {
        h = mix64(h ^ (k as u64));
    }
    h
}

pub fn rng_for(master: u64, tag: u64, key: &[i64]) -> Rng {
    Rng::seed_from_u64(derive_seed(master, tag, key))
}

/// Uniform draw from the open interval (0, 1).
pub fn open01<R: rand::RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Exponential draw with the given rate.
pub fn exponential<R: rand::RngCore + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    -open01(rng).ln() / rate
}
