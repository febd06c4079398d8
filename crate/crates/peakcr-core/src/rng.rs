//! Deterministic derivation of independent random streams.
//!
//! Every stochastic stage derives its generator from one master seed plus a
//! few integer coordinates (domain tag, replicate, subject, draw). Derivation
//! expands the coordinates into a full 256-bit ChaCha key through a SplitMix64
//! absorb/finalize chain, so streams from different coordinates are
//! structurally independent: reordering work across threads, or adding new
//! domains, never changes the numbers any existing stream produces.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tag: per-subject lattice noise (coordinates: replicate, subject).
pub const DOMAIN_NOISE: u64 = 1;
/// Domain tag: confidence-region Monte Carlo draws (coordinate: context id).
pub const DOMAIN_REGION_MC: u64 = 2;
/// Domain tag: direct distributional checks in the simulation harness.
pub const DOMAIN_LEMMA_CHECK: u64 = 3;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Absorb one word into a running SplitMix64 state.
fn absorb(state: u64, word: u64) -> u64 {
    mix(state.wrapping_add(0x9e37_79b9_7f4a_7c15) ^ mix(word))
}

/// ChaCha8 generator keyed by `(master, domain, a, b)`.
#[must_use]
pub fn derive_rng(master: u64, domain: u64, a: u64, b: u64) -> ChaCha8Rng {
    let state = absorb(absorb(absorb(mix(master), domain), a), b);
    let mut key = [0u8; 32];
    for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
        chunk.copy_from_slice(&mix(state.wrapping_add(i as u64 + 1)).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Noise generator for one subject within one replicate.
#[must_use]
pub fn subject_rng(master: u64, replicate: u64, subject: u64) -> ChaCha8Rng {
    derive_rng(master, DOMAIN_NOISE, replicate, subject)
}

/// Generator for confidence-region Monte Carlo; callers give each draw its
/// own substream via [`rand_chacha::ChaCha8Rng::set_stream`], keeping draw `k`
/// identical no matter how draws are batched or parallelized.
#[must_use]
pub fn region_mc_rng(master: u64, context: u64) -> ChaCha8Rng {
    derive_rng(master, DOMAIN_REGION_MC, context, 0)
}

/// Generator for one replicate of a direct distributional check.
#[must_use]
pub fn lemma_rng(master: u64, replicate: u64) -> ChaCha8Rng {
    derive_rng(master, DOMAIN_LEMMA_CHECK, replicate, 0)
}
