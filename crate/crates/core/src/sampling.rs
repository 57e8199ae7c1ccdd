//! Low-discrepancy sample points for "holds at every point" checks.

const PRIMES: [u32; 32] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97, 101, 103, 107, 109, 113, 127, 131,
];

/// Sample count for pointwise checks when the caller supplies none.
pub const DEFAULT_SAMPLES: usize = 200;

/// Number of leading Halton indices skipped; early points cluster near the
/// origin in high dimensions.
const SKIP: usize = 20;

fn radical_inverse(mut index: usize, base: u32) -> f64 {
    let base = base as usize;
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut out = 0.0;
    while index > 0 {
        out += (index % base) as f64 * scale;
        index /= base;
        scale *= inv;
    }
    out
}

fn nth_prime(i: usize) -> u32 {
    if i < PRIMES.len() {
        return PRIMES[i];
    }
    let mut count = PRIMES.len();
    let mut candidate = *PRIMES.last().unwrap() + 2;
    loop {
        if (2..).take_while(|d| d * d <= candidate).all(|d| candidate % d != 0) {
            if count == i {
                return candidate;
            }
            count += 1;
        }
        candidate += 2;
    }
}

/// `count` points of the Halton sequence in the open unit cube `(0,1)^dim`.
pub fn halton(dim: usize, count: usize) -> Vec<Vec<f64>> {
    let bases: Vec<u32> = (0..dim).map(nth_prime).collect();
    (0..count)
        .map(|k| {
            bases
                .iter()
                .map(|b| radical_inverse(k + SKIP + 1, *b))
                .collect()
        })
        .collect()
}
