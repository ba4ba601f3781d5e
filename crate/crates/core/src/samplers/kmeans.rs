use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_target, structure_means, CompressionResult, Method};
use crate::descriptor::DescriptorSet;
use crate::error::Result;
use crate::info::squared_distance;

pub const KMEANS_MAX_ITER: usize = 300;
/// Relative tolerance on the total squared center shift, scaled by the mean
/// per-feature variance of the data.
pub const KMEANS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    /// Flattened cluster centers, `k × width`.
    pub centers: Vec<f64>,
    /// Cluster of each point. Every cluster is non-empty.
    pub labels: Vec<usize>,
    pub iterations: usize,
}

struct Points<'a> {
    data: &'a [f64],
    width: usize,
}

impl Points<'_> {
    fn len(&self) -> usize {
        self.data.len() / self.width
    }

    fn get(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }
}

fn nearest_center(p: &[f64], centers: &[f64], width: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.chunks_exact(width).enumerate() {
        let d = squared_distance(p, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// k-means++ seeding. Once every point coincides with a center, further
/// centers are drawn uniformly from points not chosen yet.
fn plus_plus(points: &Points<'_>, k: usize, rng: &mut impl Rng) -> Vec<f64> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.gen_range(0..n);
    chosen[first] = true;
    let mut centers = points.get(first).to_vec();
    let mut d2: Vec<f64> = (0..n)
        .map(|i| squared_distance(points.get(i), points.get(first)))
        .collect();
    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut cumulative = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                cumulative += w;
                pick = Some(i);
                if cumulative > target {
                    break;
                }
            }
            pick.expect("positive total weight")
        } else {
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.gen_range(0..free.len())]
        };
        chosen[next] = true;
        centers.extend_from_slice(points.get(next));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(squared_distance(points.get(i), points.get(next)));
        }
    }
    centers
}

/// Give every empty cluster the member of the largest cluster farthest from
/// that cluster's center.
fn repair_empty(points: &Points<'_>, centers: &mut [f64], labels: &mut [usize], k: usize) {
    let width = points.width;
    loop {
        let mut sizes = vec![0usize; k];
        for &l in labels.iter() {
            sizes[l] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let largest = (0..k).fold(0, |best, c| if sizes[c] > sizes[best] { c } else { best });
        let center = centers[largest * width..(largest + 1) * width].to_vec();
        let mut farthest: Option<(usize, f64)> = None;
        for i in (0..points.len()).filter(|&i| labels[i] == largest) {
            let d = squared_distance(points.get(i), &center);
            if farthest.is_none_or(|(_, b)| d > b) {
                farthest = Some((i, d));
            }
        }
        let (moved, _) = farthest.expect("largest cluster is non-empty");
        labels[moved] = empty;
        centers[empty * width..(empty + 1) * width].copy_from_slice(points.get(moved));
    }
}

fn assign(points: &Points<'_>, centers: &[f64], labels: &mut [usize]) {
    for (i, label) in labels.iter_mut().enumerate() {
        *label = nearest_center(points.get(i), centers, points.width).0;
    }
}

/// Lloyd's algorithm with k-means++ seeding on flattened `data`.
pub fn kmeans(data: &[f64], width: usize, k: usize, seed: u64) -> Result<KMeansFit> {
    let points = Points { data, width };
    let n = points.len();
    check_target(k, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut mean = vec![0.0; width];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(points.get(i)) {
            *m += v / n as f64;
        }
    }
    let variance: f64 = (0..n)
        .map(|i| squared_distance(points.get(i), &mean))
        .sum::<f64>()
        / (n * width) as f64;
    let tolerance = KMEANS_TOL * variance;

    let mut centers = plus_plus(&points, k, &mut rng);
    let mut labels = vec![0usize; n];
    let mut iterations = 0;
    while iterations < KMEANS_MAX_ITER {
        iterations += 1;
        assign(&points, &centers, &mut labels);
        repair_empty(&points, &mut centers, &mut labels, k);

        let mut updated = vec![0.0; k * width];
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            for (u, v) in updated[l * width..(l + 1) * width]
                .iter_mut()
                .zip(points.get(i))
            {
                *u += v;
            }
        }
        for (c, center) in updated.chunks_exact_mut(width).enumerate() {
            for u in center.iter_mut() {
                *u /= counts[c] as f64;
            }
        }
        let shift = squared_distance(&updated, &centers);
        centers = updated;
        if shift <= tolerance {
            break;
        }
    }
    assign(&points, &centers, &mut labels);
    repair_empty(&points, &mut centers, &mut labels, k);
    Ok(KMeansFit {
        centers,
        labels,
        iterations,
    })
}

/// Cluster structure means into `k` groups and draw one member per cluster.
pub fn sample_kmeans(descs: &DescriptorSet, k: usize, seed: u64) -> Result<CompressionResult> {
    check_target(k, descs.n_structures())?;
    let means = structure_means(descs);
    let fit = kmeans(&means, descs.width(), k, seed)?;
    // separate stream for member draws so they do not depend on iteration count
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut members = vec![Vec::new(); k];
    for (i, &l) in fit.labels.iter().enumerate() {
        members[l].push(i);
    }
    let selected = members
        .iter()
        .map(|m| m[rng.gen_range(0..m.len())])
        .collect();
    Ok(CompressionResult {
        method: Method::KMeans,
        selected,
        steps: None,
    })
}
