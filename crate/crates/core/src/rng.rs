//! Random stream plumbing.
//!
//! Every run owns a [`SimRng`], a xoshiro256++ generator. Streams are seeded
//! through `SeedableRng::seed_from_u64`, which expands the 64-bit seed with
//! PCG32 as documented by `rand_core`, so the mapping from seed to stream is
//! fixed and platform independent. Batch runs derive their per-run seed with
//! [`mix_seed`].

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

/// The generator family used for every simulation stream.
pub type SimRng = Xoshiro256PlusPlus;

/// Builds the stream for a given seed.
pub fn stream(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// SplitMix64 finalizer. Bijective on `u64`.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stateless per-run seed: `splitmix64(splitmix64(base_seed) ^ run_index)`.
///
/// For a fixed `base_seed` the map `run_index -> seed` is a bijection, so two
/// distinct run indices can never share a stream seed.
#[inline]
pub fn mix_seed(base_seed: u64, run_index: u64) -> u64 {
    splitmix64(splitmix64(base_seed) ^ run_index)
}
