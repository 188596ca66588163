//! Seeded random number generation.
//!
//! Every stochastic step in the crate (split tie-breaking, shuffling, dropout,
//! weight initialisation, synthetic data) draws from [`SeededRng`], which is
//! xoshiro256++ seeded through SplitMix64 expansion of a single `u64`. The
//! generator and its seeding are fixed so that plans and checkpoints are
//! reproducible across platforms.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type SeededRng = Xoshiro256PlusPlus;

pub fn seeded(seed: u64) -> SeededRng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}
