//! Deterministic seeding.
//!
//! Experiment seeds are consecutive four-digit groups of the decimal
//! expansion of π. Everything else that needs randomness derives its own
//! stream from one of those seeds plus a purpose tag, so results never depend
//! on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// First 256 decimals of π.
const PI_DECIMALS: &str = "\
1415926535897932384626433832795028841971693993751058209749445923078164062862089986280348253421170679\
8214808651328230664709384460955058223172535940812848111745028410270193852110555964462294895493038196\
44288109756659334461284756482337867831652712019091456485";

pub const SEED_TABLE_LEN: usize = PI_DECIMALS.len() / 4;

/// The first `count` seeds, 1415, 9265, 3589, ...
pub fn pi_seeds(count: usize) -> Result<Vec<u64>> {
    if count > SEED_TABLE_LEN {
        return Err(Error::SeedTableExhausted {
            requested: count,
            available: SEED_TABLE_LEN,
        });
    }
    Ok(PI_DECIMALS.as_bytes()[..count * 4]
        .chunks(4)
        .map(|group| {
            group
                .iter()
                .fold(0u64, |acc, &b| acc * 10 + u64::from(b - b'0'))
        })
        .collect())
}

/// Mixes a base seed with a stream tag (splitmix64 finaliser).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_add(1).wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream))
}

/// Stream tags used across the crate.
pub mod stream {
    pub const SPLIT: u64 = 1;
    pub const FIRST_BATCH: u64 = 2;
    pub const RANDOM_SCORES: u64 = 3;
    pub const EMC_CANDIDATES: u64 = 4;
    pub const COMMITTEE: u64 = 5;
    pub const MODEL: u64 = 6;
    pub const ENSEMBLE_MEMBER: u64 = 7;
    pub const CV: u64 = 8;
    pub const EMC_FIT: u64 = 9;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_prefix() {
        assert_eq!(pi_seeds(2).unwrap(), vec![1415, 9265]);
        assert_eq!(pi_seeds(5).unwrap(), vec![1415, 9265, 3589, 7932, 3846]);
        assert!(pi_seeds(0).unwrap().is_empty());
    }

    #[test]
    fn table_holds_64_groups() {
        assert_eq!(SEED_TABLE_LEN, 64);
        assert_eq!(pi_seeds(64).unwrap().len(), 64);
        assert!(matches!(
            pi_seeds(65),
            Err(Error::SeedTableExhausted { .. })
        ));
    }

    #[test]
    fn prefix_property() {
        let all = pi_seeds(64).unwrap();
        for n in 0..=64 {
            assert_eq!(pi_seeds(n).unwrap(), all[..n]);
        }
    }

    #[test]
    fn seeds_are_four_digit_values() {
        assert!(pi_seeds(64).unwrap().iter().all(|&s| s < 10_000));
    }

    #[test]
    fn derived_streams_differ() {
        assert_ne!(derive_seed(1415, 0), derive_seed(1415, 1));
        assert_ne!(derive_seed(1415, 0), derive_seed(9265, 0));
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }
}
