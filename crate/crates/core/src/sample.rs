//! Low-discrepancy sample points in a box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Radical inverse of `i` in base `b`.
pub fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= b as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

/// `count` Halton points in `bounds`, with a Cranley–Patterson shift drawn
/// from `seed`.
pub fn halton_box(bounds: &[(f64, f64)], count: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(bounds.len() <= PRIMES.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = bounds.iter().map(|_| rng.gen::<f64>()).collect();
    (1..=count as u64)
        .map(|i| {
            bounds
                .iter()
                .enumerate()
                .map(|(d, &(lo, hi))| {
                    let u = (radical_inverse(i, PRIMES[d]) + shift[d]).fract();
                    lo + (hi - lo) * u
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
    }

    #[test]
    fn points_stay_in_box_and_repeat() {
        let b = [(0.0, 1.0), (-2.0, 2.0), (0.5, 0.6)];
        let a = halton_box(&b, 100, 9);
        assert_eq!(a, halton_box(&b, 100, 9));
        assert_ne!(a, halton_box(&b, 100, 10));
        for p in &a {
            for (x, (lo, hi)) in p.iter().zip(b) {
                assert!(*x >= lo && *x < hi);
            }
        }
    }
}
