//! Derived random streams.
//!
//! Every episode draws from its own generator, seeded from the root seed and
//! a path of integers (run, episode, purpose, ...). Results therefore do not
//! depend on how episodes are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream purposes.
pub const COMPOSE: u64 = 1;
pub const ROLLOUT: u64 = 2;
pub const RUN: u64 = 3;
pub const EVAL: u64 = 4;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(root: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(root), |acc, &p| {
            splitmix64(acc.rotate_left(17) ^ splitmix64(p).wrapping_add(0x632b_e59b_d9b4_e019))
        })
}

pub fn stream(root: u64, path: &[u64]) -> Rng {
    Rng::seed_from_u64(derive_seed(root, path))
}
