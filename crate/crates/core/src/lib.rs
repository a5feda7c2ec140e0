//! A laboratory for smart-card remote user authentication.
//!
//! Two schemes live side by side: [`jiang`], a timestamp-based scheme kept
//! with all of its weaknesses, and [`proposed`], a nonce-based scheme with
//! pseudonyms, key confirmation, local password change and card revocation.
//! [`adversary`] drives a Dolev-Yao channel and mechanizes the attacks
//! against both; [`registry`] persists server state and transcripts.

pub mod adversary;
pub mod clock;
pub mod cost;
pub mod counter;
pub mod crypto;
pub mod error;
pub mod jiang;
pub mod proposed;
pub mod registry;
pub mod scenario;
pub mod wire;

pub use clock::{Party, SimClock};
pub use counter::{OpCounter, OpCounts, Phase};
pub use crypto::{Digest, GroupElement, GroupParams, Scalar, SecurityLabel};
pub use error::{CryptoError, Reject, StoreError};
