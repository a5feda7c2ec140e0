//! Group arithmetic, hashing and randomness shared by both schemes.

mod group;
mod hash;
pub mod prime;

pub use group::{GroupElement, GroupParams, Scalar, SecurityLabel};
pub use hash::Digest;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// The deterministic generator used throughout the lab.
pub type LabRng = ChaCha20Rng;

pub fn seeded_rng(seed: u64) -> LabRng {
    ChaCha20Rng::seed_from_u64(seed)
}
