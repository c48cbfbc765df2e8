//! Deterministic quasi-random points in a box.

use crate::fields::Domain;

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as f64;
    let mut inv = 1.0 / b;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base as u64) as f64 * inv;
        i /= base as u64;
        inv /= b;
    }
    out
}

/// The first `n` Halton points mapped into `domain` (index 0 skipped).
pub fn halton(domain: &Domain, n: usize) -> Vec<Vec<f64>> {
    let d = domain.dim();
    assert!(d <= PRIMES.len(), "halton supports d ≤ {}", PRIMES.len());
    (1..=n as u64)
        .map(|i| {
            (0..d)
                .map(|a| domain.lo[a] + radical_inverse(i, PRIMES[a]) * domain.width(a))
                .collect()
        })
        .collect()
}
