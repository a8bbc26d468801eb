//! Splittable seed derivation.
//!
//! Every random stream in the crate is derived from a root seed plus a path
//! of tag words (stream kind, cell index, repeat index, ...). Results are
//! therefore independent of execution order and worker count: a task's
//! stream depends only on its path, never on which thread ran it.

use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

/// Stream tags. Keeping them in one place avoids accidental collisions
/// between subsystems that derive from the same root seed.
pub mod tag {
    pub const OUTCOME: u64 = 0x01;
    pub const FEATURE: u64 = 0x02;
    pub const TREE: u64 = 0x03;
    pub const PERMUTATION: u64 = 0x04;
    pub const SPLIT: u64 = 0x05;
    pub const BOOTSTRAP: u64 = 0x06;
    pub const FOLDS: u64 = 0x07;
    pub const GRID_CELL: u64 = 0x08;
    pub const FOREST: u64 = 0x09;
    pub const NOISE: u64 = 0x0a;
    pub const REPEAT: u64 = 0x0b;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a path of tag words into a derived 64-bit seed.
pub fn derive(root: u64, path: &[u64]) -> u64 {
    let mut h = splitmix64(root ^ 0x6a09_e667_f3bc_c908);
    for &w in path {
        h = splitmix64(h ^ splitmix64(w));
    }
    h
}

/// A deterministic, platform-independent RNG for the given derived path.
pub fn rng(root: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(root, path))
}
