//! Seed derivation.
//!
//! Every source of randomness in the project flows from a single root seed.
//! Sub-streams are derived with a fixed counter scheme so that each pipeline
//! stage (and each epoch / sample inside a stage) gets an independent,
//! reproducible generator:
//!
//! ```text
//! seed(root, stream, counter) = mix(mix(root ^ mix(stream)) ^ counter)
//! ```
//!
//! where `mix` is the SplitMix64 output function. The derived 64-bit value
//! seeds a ChaCha8 generator, which produces identical output on every
//! platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named randomness streams. The numeric value is part of the scheme; do not
/// reorder existing entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    DataNoise = 1,
    PairSampling = 2,
    ModelInit = 3,
    Mining = 4,
    MtlInit = 5,
    Batches = 6,
    Holdout = 7,
    Eval = 8,
    Replicate = 9,
}

#[inline]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a root seed, a stream tag, and a counter.
pub fn derive_seed(root: u64, stream: Stream, counter: u64) -> u64 {
    mix(mix(root ^ mix(stream as u64)) ^ counter)
}

/// ChaCha8 generator for a derived seed.
pub fn stream_rng(root: u64, stream: Stream, counter: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, stream, counter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn derivation_is_stable_and_distinct() {
        let a = derive_seed(42, Stream::DataNoise, 0);
        let b = derive_seed(42, Stream::DataNoise, 0);
        assert_eq!(a, b);
        assert_ne!(a, derive_seed(42, Stream::DataNoise, 1));
        assert_ne!(a, derive_seed(42, Stream::PairSampling, 0));
        assert_ne!(a, derive_seed(43, Stream::DataNoise, 0));
    }

    #[test]
    fn rng_streams_reproduce() {
        let mut r1 = stream_rng(7, Stream::Batches, 3);
        let mut r2 = stream_rng(7, Stream::Batches, 3);
        for _ in 0..16 {
            assert_eq!(r1.next_u64(), r2.next_u64());
        }
    }
}
