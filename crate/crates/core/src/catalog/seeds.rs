use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// splitmix64 finalizer; a bijection on `u64`.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    pub fn sample_seed(&self, index: u64) -> u64 {
        mix64(mix64(self.master_seed) ^ index.wrapping_add(1).wrapping_mul(GOLDEN))
    }

    /// Seeds for samples `0..n`, checked to be pairwise distinct.
    pub fn seeds(&self, n: usize) -> Result<Vec<u64>> {
        let seeds: Vec<u64> = (0..n as u64).map(|i| self.sample_seed(i)).collect();
        let mut seen = HashSet::with_capacity(n);
        for (i, s) in seeds.iter().enumerate() {
            if !seen.insert(*s) {
                return Err(Error::InvalidInput(format!(
                    "per-sample seed collision at index {i} for master seed {}",
                    self.master_seed
                )));
            }
        }
        Ok(seeds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_stable_and_distinct() {
        let s = SeedSpec::new(1);
        assert_eq!(s.seeds(1000).unwrap(), s.seeds(1000).unwrap());
        assert_ne!(SeedSpec::new(2).sample_seed(0), s.sample_seed(0));
        assert_eq!(mix64(0), 0);
    }
}
