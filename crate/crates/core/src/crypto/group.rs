//! Safe-prime group parameters and the arithmetic both schemes share.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigUint, RandBigInt};
use num_traits::One;
use rand::RngCore;

use super::hash::Digest;
use super::prime;
use crate::counter::OpCounter;
use crate::error::CryptoError;

/// 512-bit safe prime, found by seeded random search.
const P_512: &str = "c1f7ff0068254bddbea03aef51a8e99e7d2d1d05eaecb4138213a5b4e3c5570253ec56a65310faf0fedf380d647d0c63af394864ddedc325dc51a9493920a8ef";

/// The 1024-bit Oakley MODP group 2 prime (RFC 2409), a safe prime.
const P_1024: &str = "ffffffffffffffffc90fdaa22168c234c4c6628b80dc1cd129024e088a67cc74020bbea63b139b22514a08798e3404ddef9519b3cd3a431b302b0a6df25f14374fe1356d6d51c245e485b576625e7ec6f44c42e9a637ed6b0bff5cb6f406b7edee386bfb5a899fa5ae9f24117c4b1fe649286651ece65381ffffffffffffffff";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SecurityLabel {
    TestTiny,
    Test512,
    Demo1024,
}

impl SecurityLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            SecurityLabel::TestTiny => "test-tiny",
            SecurityLabel::Test512 => "test-512",
            SecurityLabel::Demo1024 => "demo-1024",
        }
    }

    /// Stable one-byte identifier used in persisted files.
    pub fn id(self) -> u8 {
        match self {
            SecurityLabel::TestTiny => 0,
            SecurityLabel::Test512 => 1,
            SecurityLabel::Demo1024 => 2,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            0 => Some(SecurityLabel::TestTiny),
            1 => Some(SecurityLabel::Test512),
            2 => Some(SecurityLabel::Demo1024),
            _ => None,
        }
    }

    pub fn bits(self) -> u64 {
        match self {
            SecurityLabel::TestTiny => 5,
            SecurityLabel::Test512 => 512,
            SecurityLabel::Demo1024 => 1024,
        }
    }

    /// Output length of the digest function. The tiny label truncates SHA-1
    /// to 8 bytes and is insecure, for tests only.
    pub fn digest_len(self) -> usize {
        match self {
            SecurityLabel::TestTiny => 8,
            _ => 20,
        }
    }
}

impl fmt::Display for SecurityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SecurityLabel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tiny" | "test-tiny" => Ok(SecurityLabel::TestTiny),
            "512" | "test-512" => Ok(SecurityLabel::Test512),
            "1024" | "demo-1024" => Ok(SecurityLabel::Demo1024),
            other => Err(format!(
                "unknown security label '{other}' (tiny, 512, 1024)"
            )),
        }
    }
}

/// An element of Z_p^*. Always in `[1, p-1]`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupElement(BigUint);

impl GroupElement {
    pub fn value(&self) -> &BigUint {
        &self.0
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupElement({:x})", self.0)
    }
}

/// An exponent in `[1, q-1]`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Scalar(BigUint);

impl Scalar {
    pub fn value(&self) -> &BigUint {
        &self.0
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Scalar(..)")
    }
}

/// Safe-prime group `p = 2q + 1` plus the digest output length.
#[derive(Clone, PartialEq, Eq)]
pub struct GroupParams {
    label: SecurityLabel,
    p: BigUint,
    q: BigUint,
    element_len: usize,
    scalar_len: usize,
}

impl fmt::Debug for GroupParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GroupParams")
            .field("label", &self.label)
            .field("p_bits", &self.p.bits())
            .finish()
    }
}

impl GroupParams {
    /// Fixed parameters for a security label. The tiny label is `(23, 11)`.
    pub fn for_label(label: SecurityLabel) -> Self {
        let p = match label {
            SecurityLabel::TestTiny => BigUint::from(23u32),
            SecurityLabel::Test512 => BigUint::parse_bytes(P_512.as_bytes(), 16).unwrap(),
            SecurityLabel::Demo1024 => BigUint::parse_bytes(P_1024.as_bytes(), 16).unwrap(),
        };
        Self::from_safe_prime(label, p)
    }

    /// Searches for fresh parameters of the label's size. The tiny label
    /// always yields `(23, 11)`.
    pub fn generate<R: RngCore + ?Sized>(
        label: SecurityLabel,
        max_attempts: u64,
        rng: &mut R,
    ) -> Result<Self, CryptoError> {
        if label == SecurityLabel::TestTiny {
            return Ok(Self::for_label(label));
        }
        let (p, _) = prime::random_safe_prime(label.bits(), max_attempts, rng)?;
        Ok(Self::from_safe_prime(label, p))
    }

    /// Builds parameters from a prime `p` already known to be safe.
    pub fn from_safe_prime(label: SecurityLabel, p: BigUint) -> Self {
        let q: BigUint = (&p - 1u32) >> 1;
        let element_len = p.bits().div_ceil(8) as usize;
        let scalar_len = q.bits().div_ceil(8) as usize;
        GroupParams {
            label,
            p,
            q,
            element_len,
            scalar_len,
        }
    }

    pub fn label(&self) -> SecurityLabel {
        self.label
    }

    pub fn p(&self) -> &BigUint {
        &self.p
    }

    pub fn q(&self) -> &BigUint {
        &self.q
    }

    pub fn digest_len(&self) -> usize {
        self.label.digest_len()
    }

    /// Width in bytes of the canonical element encoding.
    pub fn element_len(&self) -> usize {
        self.element_len
    }

    pub fn element(&self, value: BigUint) -> Result<GroupElement, CryptoError> {
        if value == BigUint::ZERO || value >= self.p {
            return Err(CryptoError::NotAnElement);
        }
        Ok(GroupElement(value))
    }

    pub fn scalar(&self, value: BigUint) -> Result<Scalar, CryptoError> {
        if value == BigUint::ZERO || value >= self.q {
            return Err(CryptoError::ScalarOutOfRange);
        }
        Ok(Scalar(value))
    }

    /// `base^e mod p`. Counts one T_E.
    pub fn mod_exp(&self, base: &GroupElement, e: &BigUint, ops: &mut OpCounter) -> GroupElement {
        ops.exp();
        GroupElement(base.0.modpow(e, &self.p))
    }

    /// `a * b mod p`. Counts one T_M.
    pub fn mod_mul(&self, a: &GroupElement, b: &GroupElement, ops: &mut OpCounter) -> GroupElement {
        ops.mul();
        GroupElement((&a.0 * &b.0) % &self.p)
    }

    /// `a * b^-1 mod p`. Counts one T_M.
    pub fn mod_div(&self, a: &GroupElement, b: &GroupElement, ops: &mut OpCounter) -> GroupElement {
        ops.mul();
        // b is in [1, p-1] and p is prime, so the inverse exists.
        let inv =
            b.0.modinv(&self.p)
                .expect("nonzero element is invertible mod prime p");
        GroupElement((&a.0 * inv) % &self.p)
    }

    /// Maps bytes into the order-q subgroup: digest, reduce mod p, square.
    /// Results 0 and 1 are rejected by re-hashing with a one-byte counter.
    pub fn hash_to_group(&self, data: &[u8], ops: &mut OpCounter) -> GroupElement {
        for ctr in 0u8..=u8::MAX {
            let d = if ctr == 0 {
                self.digest(&[data], ops)
            } else {
                self.digest(&[data, &[ctr]], ops)
            };
            let v = BigUint::from_bytes_be(d.as_bytes()) % &self.p;
            let g = (&v * &v) % &self.p;
            if g > BigUint::one() {
                return GroupElement(g);
            }
        }
        unreachable!("256 consecutive digests all reduced to 0 or +-1 mod p")
    }

    /// Uniform scalar in `[1, q-1]`.
    pub fn sample_exponent<R: RngCore + ?Sized>(&self, rng: &mut R) -> Scalar {
        Scalar(rng.gen_biguint_range(&BigUint::one(), &self.q))
    }

    /// Maps a password to an exponent: digest, then reduce mod q. Counts one T_h.
    pub fn password_exponent(&self, password: &str, ops: &mut OpCounter) -> BigUint {
        let d = self.digest(&[password.as_bytes()], ops);
        BigUint::from_bytes_be(d.as_bytes()) % &self.q
    }

    /// Fixed-width big-endian encoding, width = byte length of p.
    pub fn encode_element(&self, e: &GroupElement) -> Vec<u8> {
        left_pad(&e.0.to_bytes_be(), self.element_len)
    }

    pub fn decode_element(&self, bytes: &[u8]) -> Result<GroupElement, CryptoError> {
        if bytes.len() != self.element_len {
            return Err(CryptoError::NotAnElement);
        }
        self.element(BigUint::from_bytes_be(bytes))
    }

    /// Fixed-width big-endian encoding, width = byte length of q.
    pub fn encode_scalar(&self, s: &Scalar) -> Vec<u8> {
        left_pad(&s.0.to_bytes_be(), self.scalar_len)
    }

    pub fn decode_scalar(&self, bytes: &[u8]) -> Result<Scalar, CryptoError> {
        self.scalar(BigUint::from_bytes_be(bytes))
    }

    /// Digest of a canonical element encoding.
    pub fn digest_element(&self, e: &GroupElement, ops: &mut OpCounter) -> Digest {
        self.digest(&[&self.encode_element(e)], ops)
    }
}

fn left_pad(bytes: &[u8], width: usize) -> Vec<u8> {
    let mut out = vec![0u8; width.saturating_sub(bytes.len())];
    out.extend_from_slice(bytes);
    out
}
