//! Seeded random streams.
//!
//! Every random draw comes from a ChaCha8 stream keyed by the run seed and a
//! 64-bit stream id `(domain << 48) | index`. Work that is split across
//! threads (one stream per pair row, node or topic) therefore produces the
//! same values regardless of scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    /// Community strengths and topic-behavior distributions.
    Global = 1,
    /// Membership vector of node `index`.
    Membership = 2,
    /// All pairs `(index, n2)` with `n2 > index`.
    PairRow = 3,
    /// Selection count, fresh indicator and selections of node `index`.
    Behavior = 4,
    /// Variational initialization of node `index`.
    InitNode = 5,
    /// Variational initialization of global parameters.
    InitGlobal = 6,
    /// Cross-validation fold assignment.
    Folds = 7,
    /// Token draws of node `index`.
    Selections = 8,
    /// Seed of cross-validation fit job `index`.
    CvJob = 9,
}

pub fn stream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    debug_assert!(index < (1 << 48));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << 48) | index);
    rng
}
