use std::fmt;

use sha1::{Digest as _, Sha1};

use super::group::GroupParams;
use crate::counter::OpCounter;
use crate::error::CryptoError;

/// Output of the one-way hash `h(.)`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Digest(Vec<u8>);

impl Digest {
    /// Wraps raw bytes. Length is not checked here; digests received off the
    /// wire may be truncated and simply fail comparison.
    pub fn from_bytes(bytes: impl Into<Vec<u8>>) -> Self {
        Digest(bytes.into())
    }

    pub fn zero(len: usize) -> Self {
        Digest(vec![0u8; len])
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", hex::encode(&self.0))
    }
}

impl AsRef<[u8]> for Digest {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

impl GroupParams {
    /// `h(part_0 || part_1 || ...)` with every part length-prefixed (u32 BE),
    /// so distinct part lists never collide by re-splitting. Counts one T_h.
    pub fn digest(&self, parts: &[&[u8]], ops: &mut OpCounter) -> Digest {
        ops.hash();
        let mut h = Sha1::new();
        for part in parts {
            h.update((part.len() as u32).to_be_bytes());
            h.update(part);
        }
        let mut out = h.finalize().to_vec();
        out.truncate(self.digest_len());
        Digest(out)
    }

    /// Bytewise XOR of equal-length digests. Counts one T_X.
    pub fn xor_digest(
        &self,
        a: &Digest,
        b: &Digest,
        ops: &mut OpCounter,
    ) -> Result<Digest, CryptoError> {
        if a.len() != b.len() {
            return Err(CryptoError::LengthMismatch {
                left: a.len(),
                right: b.len(),
            });
        }
        ops.xor();
        Ok(Digest(a.0.iter().zip(&b.0).map(|(x, y)| x ^ y).collect()))
    }

    /// XOR of two byte strings of possibly different length; the shorter
    /// one is zero-extended. Counts one T_X.
    pub fn xor_padded(&self, a: &[u8], b: &[u8], ops: &mut OpCounter) -> Vec<u8> {
        ops.xor();
        let n = a.len().max(b.len());
        (0..n)
            .map(|i| a.get(i).copied().unwrap_or(0) ^ b.get(i).copied().unwrap_or(0))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::SecurityLabel;
    use proptest::prelude::*;

    fn params() -> GroupParams {
        GroupParams::for_label(SecurityLabel::Test512)
    }

    #[test]
    fn framing_is_injective() {
        let g = params();
        let mut ops = OpCounter::new();
        assert_ne!(
            g.digest(&[b"ab", b"c"], &mut ops),
            g.digest(&[b"a", b"bc"], &mut ops)
        );
        assert_ne!(
            g.digest(&[b"abc"], &mut ops),
            g.digest(&[b"ab", b"c"], &mut ops)
        );
        assert_eq!(ops.total().hash, 4);
    }

    #[test]
    fn empty_digest_is_constant() {
        let g = params();
        let mut ops = OpCounter::new();
        let d = g.digest(&[], &mut ops);
        // SHA-1 of the empty string.
        assert_eq!(
            hex::encode(d.as_bytes()),
            "da39a3ee5e6b4b0d3255bfef95601890afd80709"
        );
        assert_eq!(d.len(), 20);
    }

    #[test]
    fn tiny_digest_is_truncated() {
        let g = GroupParams::for_label(SecurityLabel::TestTiny);
        let mut ops = OpCounter::new();
        let d = g.digest(&[], &mut ops);
        assert_eq!(hex::encode(d.as_bytes()), "da39a3ee5e6b4b0d");
    }

    #[test]
    fn element_digest_uses_canonical_width() {
        let g = params();
        let mut ops = OpCounter::new();
        let e = g.element(num_bigint::BigUint::from(5u32)).unwrap();
        let enc = g.encode_element(&e);
        assert_eq!(enc.len(), 64);
        assert_eq!(g.digest_element(&e, &mut ops), g.digest(&[&enc], &mut ops));
    }

    #[test]
    fn xor_identities() {
        let g = params();
        let mut ops = OpCounter::new();
        let a = g.digest(&[b"a"], &mut ops);
        let zero = Digest::zero(20);
        assert_eq!(g.xor_digest(&a, &a, &mut ops).unwrap(), zero);
        assert_eq!(g.xor_digest(&a, &zero, &mut ops).unwrap(), a);
        assert_eq!(
            g.xor_digest(&a, &Digest::zero(8), &mut ops),
            Err(CryptoError::LengthMismatch { left: 20, right: 8 })
        );
    }

    #[test]
    fn xor_padded_extends_shorter() {
        let g = params();
        let mut ops = OpCounter::new();
        assert_eq!(
            g.xor_padded(b"\x01\x02\x03", b"\x01", &mut ops),
            vec![0, 2, 3]
        );
    }

    proptest! {
        #[test]
        fn xor_is_an_involution(a in proptest::collection::vec(any::<u8>(), 20), b in proptest::collection::vec(any::<u8>(), 20)) {
            let g = params();
            let mut ops = OpCounter::new();
            let (a, b) = (Digest::from_bytes(a), Digest::from_bytes(b));
            let ab = g.xor_digest(&a, &b, &mut ops).unwrap();
            prop_assert_eq!(g.xor_digest(&ab, &b, &mut ops).unwrap(), a);
        }
    }
}
