//! Reproducible random streams.
//!
//! Every draw comes from a ChaCha8 stream selected by `(seed, path, purpose)`.
//! ChaCha is counter based, so distinct `(path, purpose)` pairs address disjoint
//! streams under one key and paths can be generated in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

/// What a stream is used for; keeps e.g. noise and mark draws apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Purpose {
    LevyNoise = 1,
    GaussianNoise = 2,
    GaussianReference = 3,
    GaussianControl = 4,
    Test = 255,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamId {
    pub seed: u64,
    pub path: u64,
    pub purpose: Purpose,
}

impl StreamId {
    pub fn new(seed: u64, path: u64, purpose: Purpose) -> Self {
        Self { seed, path, purpose }
    }

    pub fn rng(&self) -> StreamRng {
        assert!(self.path < 1 << 56, "path index exceeds stream space");
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream((self.path << 8) | self.purpose as u64);
        rng
    }
}

/// Folds textual labels into a base seed (SHA-256, first eight bytes little endian).
pub fn derive_seed(base: u64, labels: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    for l in labels {
        h.update((l.len() as u64).to_le_bytes());
        h.update(l.as_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| 0).scan(StreamId::new(7, 3, Purpose::LevyNoise).rng(), |r, _| Some(r.random())).collect();
        let b: Vec<u64> = (0..4).map(|_| 0).scan(StreamId::new(7, 3, Purpose::LevyNoise).rng(), |r, _| Some(r.random())).collect();
        let c: Vec<u64> = (0..4).map(|_| 0).scan(StreamId::new(7, 4, Purpose::LevyNoise).rng(), |r, _| Some(r.random())).collect();
        let d: Vec<u64> = (0..4).map(|_| 0).scan(StreamId::new(7, 3, Purpose::GaussianNoise).rng(), |r, _| Some(r.random())).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn derived_seeds_depend_on_every_label() {
        let s = derive_seed(1, &["compare", "gamma"]);
        assert_eq!(s, derive_seed(1, &["compare", "gamma"]));
        assert_ne!(s, derive_seed(1, &["compare", "stable"]));
        assert_ne!(s, derive_seed(2, &["compare", "gamma"]));
        assert_ne!(derive_seed(1, &["ab", "c"]), derive_seed(1, &["a", "bc"]));
    }
}
