//! Deterministic random-number plumbing.
//!
//! Every stochastic component (weight init, shuffles, dropout, bootstrap
//! draws, tie-break scans) pulls from a ChaCha8 stream whose seed is derived
//! from the experiment master seed plus a purpose tag and an index. Derived
//! seeds decouple the consumers: adding draws to one component never shifts
//! the stream seen by another, so runs stay reproducible under refactoring.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream cipher RNG used everywhere randomness is required.
pub type Rng = ChaCha8Rng;

/// RNG seeded directly from a master seed.
pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent seed from `master` for the purpose named by `tag`
/// (e.g. `"fold"`, `"epoch"`, `"tree"`) at position `index`.
pub fn derive_seed(master: u64, tag: &str, index: u64) -> u64 {
    let mut h = fnv1a(tag.as_bytes());
    h = splitmix64(h ^ master);
    splitmix64(h ^ index)
}

/// RNG seeded with [`derive_seed`].
pub fn derived_rng(master: u64, tag: &str, index: u64) -> Rng {
    rng_from_seed(derive_seed(master, tag, index))
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
