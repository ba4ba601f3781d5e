use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_target, structure_means, CompressionResult, Method};
use crate::descriptor::DescriptorSet;
use crate::error::{Error, Result};
use crate::info::squared_distance;

/// Mean farthest-point sampling with a seeded random first pick.
pub fn sample_fps(descs: &DescriptorSet, k: usize, seed: u64) -> Result<CompressionResult> {
    let n = descs.n_structures();
    check_target(k, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.gen_range(0..n);
    sample_fps_from(&structure_means(descs), descs.width(), k, first)
}

/// Farthest-point selection over flattened `points` starting at `first`.
///
/// Each step picks the remaining point with the largest *sum* of Euclidean
/// distances to everything selected so far; ties go to the lowest index.
pub fn sample_fps_from(
    points: &[f64],
    width: usize,
    k: usize,
    first: usize,
) -> Result<CompressionResult> {
    let n = points.len() / width;
    check_target(k, n)?;
    if first >= n {
        return Err(Error::input(format!("first index {first} out of range")));
    }
    let point = |i: usize| &points[i * width..(i + 1) * width];

    let mut in_pool = vec![true; n];
    let mut distance_sums = vec![0.0; n];
    let mut selected = Vec::with_capacity(k);
    selected.push(first);
    in_pool[first] = false;
    while selected.len() < k {
        let last = point(*selected.last().expect("non-empty"));
        let mut best: Option<(usize, f64)> = None;
        for i in (0..n).filter(|&i| in_pool[i]) {
            distance_sums[i] += squared_distance(point(i), last).sqrt();
            if best.is_none_or(|(_, b)| distance_sums[i] > b) {
                best = Some((i, distance_sums[i]));
            }
        }
        let (next, _) = best.expect("pool is non-empty while k <= n");
        in_pool[next] = false;
        selected.push(next);
    }
    Ok(CompressionResult {
        method: Method::Fps,
        selected,
        steps: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_of_distances_criterion() {
        // means at 0, 1, 10 starting from 0: 10 is farthest, then 1 (1 + 9 = 10 total)
        let points = [0.0, 1.0, 10.0];
        let r = sample_fps_from(&points, 1, 3, 0).unwrap();
        assert_eq!(r.selected, vec![0, 2, 1]);
    }

    #[test]
    fn sum_differs_from_min_distance() {
        // from 0 the farthest is 13; then -3 has sum 3 + 16 while 5 has 5 + 8,
        // whereas a min-distance rule would prefer 5 (min 5 against min 3)
        let points = [0.0, 13.0, 5.0, -3.0];
        let r = sample_fps_from(&points, 1, 3, 0).unwrap();
        assert_eq!(r.selected, vec![0, 1, 3]);
    }

    #[test]
    fn identical_means_tie_to_lowest_index() {
        let points = [1.0; 5];
        let r = sample_fps_from(&points, 1, 4, 2).unwrap();
        assert_eq!(r.selected, vec![2, 0, 1, 3]);
    }

    #[test]
    fn full_selection() {
        let set = DescriptorSet::from_structures(&[
            vec![vec![0.0]],
            vec![vec![1.0]],
            vec![vec![3.0]],
            vec![vec![7.0]],
        ])
        .unwrap();
        let mut sel = sample_fps(&set, 4, 11).unwrap().selected;
        sel.sort_unstable();
        assert_eq!(sel, vec![0, 1, 2, 3]);
    }
}
