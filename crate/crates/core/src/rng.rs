use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random source used everywhere in the crate. ChaCha8 is seedable from a
/// plain u64 and produces the same stream on every platform, which is what
/// makes runs reproducible from a manifest.
pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Derives an independent stream from a base seed and up to two indices.
/// Used to give each (source, destination) pair or sweep point its own
/// generator so work can be farmed out in parallel without the schedule
/// affecting results.
pub fn derive_stream(seed: u64, a: u64, b: u64) -> SimRng {
    // SplitMix64-style mixing; consecutive indices land far apart.
    let mut z = seed
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    SimRng::seed_from_u64(z)
}
