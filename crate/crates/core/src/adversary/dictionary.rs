use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::Path;

use rand::Rng;

use crate::crypto::seeded_rng;

/// 64 symbols, so each character carries six bits.
pub const ALPHABET: &[u8; 64] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789._";

pub fn random_credential<R: Rng + ?Sized>(rng: &mut R, len: usize) -> String {
    (0..len)
        .map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())] as char)
        .collect()
}

/// `n` distinct six-character words drawn from a seeded generator.
pub fn default_dictionary(seed: u64, n: usize) -> Vec<String> {
    let mut rng = seeded_rng(seed ^ 0x6469_6374);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let w = random_credential(&mut rng, 6);
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

/// One word per line; blank lines are skipped, order is kept.
pub fn load_dictionary(path: &Path) -> io::Result<Vec<String>> {
    Ok(fs::read_to_string(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}
