//! Deterministic seed derivation.
//!
//! Every stochastic component in the crate is driven by a ChaCha8 stream
//! seeded through the functions here, so a run is reproducible from a single
//! 64-bit seed regardless of thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Odd multiplier used to spread consecutive indices across the 64-bit space
/// (the fractional part of the golden ratio).
pub const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer. Bijective on u64, so distinct inputs give distinct
/// outputs.
#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for substream `index` of a run keyed by `base`.
///
/// Defined bit-exactly as `splitmix64(base ^ ((index + 1) * GOLDEN_GAMMA))`:
/// the multiplier is odd, so the pre-mix values are distinct for distinct
/// indices, and SplitMix64 is a bijection, so the derived seeds are distinct
/// too. Replica RNGs in the harness and per-chunk RNGs inside a sweep both use
/// this function.
#[inline]
pub fn substream_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA))
}

/// ChaCha8 stream for substream `index` of `base`.
pub fn substream_rng(base: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(substream_seed(base, index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn substream_seeds_are_distinct() {
        let seeds: HashSet<u64> = (0..10_000).map(|i| substream_seed(42, i)).collect();
        assert_eq!(seeds.len(), 10_000);
    }

    #[test]
    fn seed_mix_is_stable() {
        // Frozen values: the mix function is part of the reproducibility
        // contract, so a change here is a breaking change.
        assert_eq!(substream_seed(0, 0), splitmix64(GOLDEN_GAMMA));
        assert_eq!(substream_seed(1234, 7), splitmix64(1234 ^ 8u64.wrapping_mul(GOLDEN_GAMMA)));
    }
}
