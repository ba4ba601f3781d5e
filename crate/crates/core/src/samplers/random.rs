use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_target, CompressionResult, Method};
use crate::error::Result;

/// Uniform sample of `k` out of `n_structures` indices, without replacement.
pub fn sample_random(n_structures: usize, k: usize, seed: u64) -> Result<CompressionResult> {
    check_target(k, n_structures)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let selected = index::sample(&mut rng, n_structures, k).into_vec();
    Ok(CompressionResult {
        method: Method::Random,
        selected,
        steps: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_sample_is_a_permutation() {
        let mut sel = sample_random(10, 10, 3).unwrap().selected;
        sel.sort_unstable();
        assert_eq!(sel, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn seeded_runs_agree() {
        let a = sample_random(50, 7, 42).unwrap();
        let b = sample_random(50, 7, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.selected, sample_random(50, 7, 43).unwrap().selected);
    }

    #[test]
    fn too_many() {
        assert!(sample_random(3, 4, 0).is_err());
    }

    #[test]
    fn single_pick_is_uniform() {
        // chi-squared over 10^4 seeds, 3 degrees of freedom
        let mut counts = [0usize; 4];
        let trials = 10_000;
        for seed in 0..trials {
            counts[sample_random(4, 1, seed).unwrap().selected[0]] += 1;
        }
        let expected = trials as f64 / 4.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 99.9th percentile of chi^2 with 3 dof
        assert!(chi2 < 16.27, "chi2 = {chi2}, counts = {counts:?}");
    }
}
