//! Seeded random streams.
//!
//! Every stochastic component draws from its own named substream so that,
//! for example, disabling the cloud path leaves the edge detector's draws
//! untouched. Substreams are derived from the run seed and a label, so the
//! whole artifact is reproducible from a single `u64`.

use rand::rngs::StdRng;
use rand::SeedableRng;

/// FNV-1a over the label, folded into the seed.
fn mix(seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// A deterministic RNG for the given seed and stream label.
pub fn substream(seed: u64, label: &str) -> StdRng {
    StdRng::seed_from_u64(mix(seed, label))
}
