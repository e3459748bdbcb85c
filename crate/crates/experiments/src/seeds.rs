//! Counter-based seed derivation, so a trial's randomness depends only on
//! what it is, never on when or where it runs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds the master seed, a stream tag, the cell coordinates and the trial
/// index into one seed.
pub fn derive_seed(master: u64, stream: u64, coords: &[u64], trial: u64) -> u64 {
    let mut h = splitmix64(master);
    for &x in std::iter::once(&stream)
        .chain(coords)
        .chain(std::iter::once(&trial))
    {
        h = splitmix64(h ^ x);
    }
    h
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn known_splitmix_output() {
        // First output of the reference generator seeded with 0.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
    }

    #[test]
    fn distinct_inputs_distinct_seeds() {
        let mut seen = HashSet::new();
        for stream in 0..3 {
            for a in 0..8 {
                for b in 0..8 {
                    for trial in 0..10 {
                        assert!(seen.insert(derive_seed(7, stream, &[a, b], trial)));
                    }
                }
            }
        }
        assert_ne!(derive_seed(1, 0, &[2, 3], 0), derive_seed(1, 0, &[3, 2], 0));
        assert_eq!(derive_seed(9, 1, &[4], 2), derive_seed(9, 1, &[4], 2));
    }
}
