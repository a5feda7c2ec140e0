use std::fmt;

use thiserror::Error;

/// Domain errors raised by group and digest arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("value is not a group element (must lie in [1, p-1])")]
    NotAnElement,
    #[error("scalar out of range [1, q-1]")]
    ScalarOutOfRange,
    #[error("digest length mismatch: {left} vs {right} bytes")]
    LengthMismatch { left: usize, right: usize },
    #[error("safe prime generation gave up after {attempts} attempts")]
    GenerationTimeout { attempts: u64 },
}

/// Why a protocol step refused to continue.
///
/// The variants are deliberately distinguishable so the attack harness can
/// tell a freshness failure from a MAC failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Reject {
    UnknownId,
    UnknownNid,
    DuplicateId,
    StaleTimestamp,
    BadMac,
    BadCredentials,
    ServerUnavailable,
    LockedOut,
    Malformed,
}

impl Reject {
    pub fn as_str(self) -> &'static str {
        match self {
            Reject::UnknownId => "unknown-id",
            Reject::UnknownNid => "unknown-nid",
            Reject::DuplicateId => "duplicate-id",
            Reject::StaleTimestamp => "stale-timestamp",
            Reject::BadMac => "bad-mac",
            Reject::BadCredentials => "bad-credentials",
            Reject::ServerUnavailable => "server-unavailable",
            Reject::LockedOut => "locked-out",
            Reject::Malformed => "malformed",
        }
    }
}

impl fmt::Display for Reject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "reject({})", self.as_str())
    }
}

impl std::error::Error for Reject {}

/// Errors from the persistence layer.
#[derive(Debug, Error)]
pub enum StoreError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u8),
    #[error("checksum mismatch")]
    ChecksumMismatch,
    #[error("file is truncated or malformed: {0}")]
    Malformed(&'static str),
    #[error("master key not stored in file and none supplied")]
    MissingMasterKey,
    #[error("refusing to overwrite {0}: existing file fails checksum (use force)")]
    RefuseOverwrite(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
