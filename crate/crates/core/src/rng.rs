//! Deterministic randomness.
//!
//! Two sources are used in the crate:
//!
//! * a counter-based integer generator (`keyed`/`coin`) for structural
//!   decisions that must be byte-identical across platforms (SBM edges,
//!   seed-node picks, split shuffles) — pure u64 arithmetic, no floats in
//!   the decision path;
//! * seeded ChaCha8 streams ([`stream`]) for weights and dropout masks,
//!   which only need run-to-run determinism for a fixed seed.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based draw: a uniform u64 for `(seed, counter)`.
pub fn keyed(seed: u64, counter: u64) -> u64 {
    splitmix64(seed ^ splitmix64(counter))
}

/// Bernoulli(p) decided by comparing a keyed u64 draw against an integer
/// threshold. `p = 0` never fires, `p = 1` always fires.
pub fn coin(seed: u64, counter: u64, p: f64) -> bool {
    let threshold = (p * 2f64.powi(64)) as u128;
    (keyed(seed, counter) as u128) < threshold
}

/// Deterministic Fisher-Yates shuffle driven by keyed draws.
pub fn shuffle<T>(items: &mut [T], seed: u64) {
    for i in (1..items.len()).rev() {
        let j = (keyed(seed, i as u64) % (i as u64 + 1)) as usize;
        items.swap(i, j);
    }
}

/// A ChaCha8 stream for substream `tag` of run `seed`.
pub fn stream(seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(keyed(seed, tag))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coin_degenerate_probabilities() {
        for c in 0..1000 {
            assert!(!coin(7, c, 0.0));
            assert!(coin(7, c, 1.0));
        }
    }

    #[test]
    fn coin_rate_near_p() {
        let hits = (0..100_000).filter(|&c| coin(42, c, 0.3)).count();
        let rate = hits as f64 / 100_000.0;
        assert!((rate - 0.3).abs() < 0.01, "rate {rate}");
    }

    #[test]
    fn shuffle_is_permutation_and_deterministic() {
        let mut a: Vec<usize> = (0..50).collect();
        let mut b = a.clone();
        shuffle(&mut a, 9);
        shuffle(&mut b, 9);
        assert_eq!(a, b);
        let mut sorted = a.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
    }
}
