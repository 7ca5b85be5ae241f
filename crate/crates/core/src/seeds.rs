//! Root-seed splitting.
//!
//! One root seed drives every randomized stage. Each stage's seed is
//! `splitmix64(root XOR fnv1a64(stage_name))`, so partial re-runs of a stage
//! reproduce the full run's behavior and adding stages never shifts the
//! seeds of existing ones.

/// SplitMix64 finalizer.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Seed for a named stage, derived from the root seed.
pub fn stage_seed(root: u64, stage: &str) -> u64 {
    splitmix64(root ^ fnv1a64(stage.as_bytes()))
}

/// Seed for the `index`-th substream of a stage (e.g. one k-means restart).
pub fn substream_seed(stage_seed: u64, index: u64) -> u64 {
    splitmix64(stage_seed ^ splitmix64(index))
}
