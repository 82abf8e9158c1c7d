//! Exact counting helpers. All arithmetic saturates at `u128::MAX`, which
//! keeps comparisons against attack budgets correct.

/// C(n, k), exact until it saturates.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) is always an integer
        match acc.checked_mul((n - i) as u128) {
            Some(v) => acc = v / (i + 1) as u128,
            None => return u128::MAX,
        }
    }
    acc
}

pub fn saturating_pow(base: u128, exp: u32) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base);
    }
    acc
}

/// Number of key candidates at flip-weight level `n` when each of the
/// `elements` differential positions has `alphabet - 1` alternatives and
/// every differential candidate expands to `alphabet` keys.
pub fn level_size(elements: u64, n: u64, alphabet: u32) -> u128 {
    let alphabet = alphabet as u128;
    binomial(elements, n)
        .saturating_mul(saturating_pow(alphabet - 1, n as u32))
        .saturating_mul(alphabet)
}

/// Candidates in levels `0..=n`.
pub fn cumulative_level_size(elements: u64, n: u64, alphabet: u32) -> u128 {
    (0..=n).fold(0u128, |acc, i| acc.saturating_add(level_size(elements, i, alphabet)))
}
