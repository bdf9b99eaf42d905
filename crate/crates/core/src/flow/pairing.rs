//! Cantor pairing on nonnegative integers.

use crate::dyadic::BinaryString;

/// `⟨m, k⟩ = (m + k)(m + k + 1)/2 + k`.
pub fn pair(m: u64, k: u64) -> u64 {
    let s = m + k;
    s * (s + 1) / 2 + k
}

/// Inverse of [`pair`].
pub fn unpair(n: u64) -> (u64, u64) {
    // Largest s with s(s+1)/2 <= n.
    let mut s = (((8 * n as u128 + 1) as f64).sqrt() as u64).saturating_sub(1) / 2;
    while (s + 1) * (s + 2) / 2 <= n {
        s += 1;
    }
    while s * (s + 1) / 2 > n {
        s -= 1;
    }
    let k = n - s * (s + 1) / 2;
    (s - k, k)
}

/// First projection: `p(⟨m, k⟩) = m`.
pub fn unpair_first(n: u64) -> u64 {
    unpair(n).0
}

/// Second projection: `p'(⟨m, k⟩) = k`.
pub fn unpair_second(n: u64) -> u64 {
    unpair(n).1
}

/// `⟨x, s⟩` with `x` replaced by its length-lexicographic index.
pub fn pair_string(x: &BinaryString, s: u64) -> u64 {
    pair(x.index(), s)
}
