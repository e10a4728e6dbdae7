//! Task-keyed seed derivation.
//!
//! Every random stream in the pipeline is keyed by the master seed, a purpose
//! tag and the integer coordinates of the task, so results do not depend on
//! the order in which tasks are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(tag: &str) -> u64 {
    tag.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// 64-bit seed for `(master, tag, keys...)`.
pub fn derive_seed(master: u64, tag: &str, keys: &[u64]) -> u64 {
    let mut h = splitmix64(master ^ fnv1a(tag));
    for &k in keys {
        h = splitmix64(h ^ splitmix64(k));
    }
    h
}

pub fn rng_for(master: u64, tag: &str, keys: &[u64]) -> Rng {
    Rng::seed_from_u64(derive_seed(master, tag, keys))
}
