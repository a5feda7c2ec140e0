//! Probabilistic primality and safe-prime search.

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::RngCore;

use crate::error::CryptoError;

/// Miller-Rabin rounds. Each round has error at most 1/4, so 32 rounds give
/// error below 2^-64.
pub const MR_ROUNDS: usize = 32;

const SMALL_PRIMES: [u32; 25] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
];

pub fn is_probable_prime<R: RngCore + ?Sized>(n: &BigUint, rng: &mut R) -> bool {
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    for &sp in &SMALL_PRIMES {
        let sp = BigUint::from(sp);
        if *n == sp {
            return true;
        }
        if (n % &sp).is_zero() {
            return false;
        }
    }

    let n_minus_one = n - 1u32;
    let mut d = n_minus_one.clone();
    let mut s = 0u32;
    while d.is_even() {
        d >>= 1;
        s += 1;
    }

    'witness: for _ in 0..MR_ROUNDS {
        let a = rng.gen_biguint_range(&two, &n_minus_one);
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_one {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_one {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Searches for a safe prime `p = 2q + 1` with exactly `bits` bits.
///
/// Gives up after `max_attempts` candidate values of `q`.
pub fn random_safe_prime<R: RngCore + ?Sized>(
    bits: u64,
    max_attempts: u64,
    rng: &mut R,
) -> Result<(BigUint, BigUint), CryptoError> {
    assert!(bits >= 3, "safe primes need at least 3 bits");
    for attempt in 1..=max_attempts {
        let mut q = rng.gen_biguint(bits - 1);
        q.set_bit(bits - 2, true);
        q.set_bit(0, true);
        // q = 1 mod 3 makes p divisible by 3, so skip those early.
        if (&q % 3u32) == BigUint::one() && bits > 3 {
            continue;
        }
        let p: BigUint = (&q << 1) + 1u32;
        if p.bits() != bits {
            continue;
        }
        if is_probable_prime(&q, rng) && is_probable_prime(&p, rng) {
            return Ok((p, q));
        }
        if attempt == max_attempts {
            break;
        }
    }
    Err(CryptoError::GenerationTimeout {
        attempts: max_attempts,
    })
}
