//! Independent recomputation of protocol values from raw SHA-1 and bigint
//! arithmetic, without going through the library's crypto layer.

#![allow(dead_code)]

use authlab::GroupParams;
use num_bigint::BigUint;
use sha1::{Digest as _, Sha1};

pub fn digest(params: &GroupParams, parts: &[&[u8]]) -> Vec<u8> {
    let mut h = Sha1::new();
    for p in parts {
        h.update((p.len() as u32).to_be_bytes());
        h.update(p);
    }
    let mut out = h.finalize().to_vec();
    out.truncate(params.digest_len());
    out
}

pub fn encode(params: &GroupParams, v: &BigUint) -> Vec<u8> {
    let width = (params.p().bits() as usize).div_ceil(8);
    let raw = v.to_bytes_be();
    let mut out = vec![0u8; width - raw.len()];
    out.extend_from_slice(&raw);
    out
}

pub fn encode_scalar(params: &GroupParams, v: &BigUint) -> Vec<u8> {
    let width = (params.q().bits() as usize).div_ceil(8);
    let raw = v.to_bytes_be();
    let mut out = vec![0u8; width - raw.len()];
    out.extend_from_slice(&raw);
    out
}

pub fn hash_to_group(params: &GroupParams, data: &[u8]) -> BigUint {
    let one = BigUint::from(1u8);
    for ctr in 0u8..=255 {
        let d = if ctr == 0 {
            digest(params, &[data])
        } else {
            digest(params, &[data, &[ctr]])
        };
        let v = BigUint::from_bytes_be(&d) % params.p();
        let g = (&v * &v) % params.p();
        if g > one {
            return g;
        }
    }
    unreachable!()
}

/// Jiang: `SK = h(D^x)`.
pub fn jiang_session_key(params: &GroupParams, d: &BigUint, x: &BigUint) -> Vec<u8> {
    let w = d.modpow(x, params.p());
    digest(params, &[&encode(params, &w)])
}

/// Improved scheme: `X_i = h(ID || N || ID_SC || x)`.
pub fn user_key(params: &GroupParams, id: &str, n: u64, id_sc: &[u8], x: &BigUint) -> Vec<u8> {
    digest(
        params,
        &[
            id.as_bytes(),
            &n.to_be_bytes(),
            id_sc,
            &encode_scalar(params, x),
        ],
    )
}

/// Improved scheme: `SK = h(ID || h(ID)^(alpha*beta) || X_i)`.
pub fn proposed_session_key(
    params: &GroupParams,
    id: &str,
    alpha: &BigUint,
    beta: &BigUint,
    x_i: &[u8],
) -> Vec<u8> {
    let h = hash_to_group(params, id.as_bytes());
    let k = h.modpow(alpha, params.p()).modpow(beta, params.p());
    digest(params, &[id.as_bytes(), &encode(params, &k), x_i])
}
