#![allow(dead_code)]

use envcover::descriptor::DescriptorSet;
use envcover::geometry::Structure;
use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const H: f64 = 0.015;
pub const WIDTH: usize = 63;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `-log Σ_j exp(-‖q - r_j‖² / 2h²)` by direct summation.
pub fn naive_delta_entropy(query: &[f64], refs: &[Vec<f64>], h: f64) -> f64 {
    let mut sum = 0.0;
    for r in refs {
        let d2: f64 = query.iter().zip(r).map(|(a, b)| (a - b) * (a - b)).sum();
        sum += (-d2 / (2.0 * h * h)).exp();
    }
    -sum.ln()
}

pub fn naive_entropy(set: &[Vec<f64>], h: f64) -> f64 {
    let n = set.len() as f64;
    let mut total = 0.0;
    for x in set {
        let density = (-naive_delta_entropy(x, set, h)).exp() / n;
        total += density.ln();
    }
    -total / n
}

pub fn naive_diversity(set: &[Vec<f64>], h: f64) -> f64 {
    set.iter()
        .map(|x| naive_delta_entropy(x, set, h).exp())
        .sum::<f64>()
        .ln()
}

/// Points scattered around a few random centers with noise of order `h`,
/// so that direct kernel sums neither underflow nor saturate.
pub fn clustered_rows(
    rng: &mut ChaCha8Rng,
    n: usize,
    n_clusters: usize,
    noise: f64,
) -> Vec<Vec<f64>> {
    let centers: Vec<Vec<f64>> = (0..n_clusters)
        .map(|_| (0..WIDTH).map(|_| rng.gen_range(0.0..1.0)).collect())
        .collect();
    (0..n)
        .map(|_| {
            let c = &centers[rng.gen_range(0..n_clusters)];
            c.iter().map(|x| x + rng.gen_range(-noise..noise)).collect()
        })
        .collect()
}

/// Synthetic descriptor set of `n_structures` structures with 1 to
/// `max_env` environments each, drawn around four centers.
pub fn random_descriptor_set(
    rng: &mut ChaCha8Rng,
    n_structures: usize,
    max_env: usize,
    noise: f64,
) -> DescriptorSet {
    let sizes: Vec<usize> = (0..n_structures)
        .map(|_| rng.gen_range(1..=max_env))
        .collect();
    let total = sizes.iter().sum();
    let mut rows = clustered_rows(rng, total, 4, noise).into_iter();
    let structures: Vec<Vec<Vec<f64>>> = sizes
        .iter()
        .map(|&n| rows.by_ref().take(n).collect())
        .collect();
    DescriptorSet::from_structures(&structures).unwrap()
}

pub fn flatten(rows: &[Vec<f64>]) -> Vec<f64> {
    rows.iter().flatten().copied().collect()
}

fn carbon(n: usize) -> Vec<String> {
    vec!["C".to_string(); n]
}

/// Random cluster of `n` atoms with no pair closer than 1 Å.
pub fn random_molecule(rng: &mut ChaCha8Rng, n: usize) -> Structure {
    let side = 1.6 * (n as f64).cbrt() + 1.0;
    let mut positions: Vec<Vector3<f64>> = Vec::with_capacity(n);
    while positions.len() < n {
        let p = Vector3::new(
            rng.gen_range(0.0..side),
            rng.gen_range(0.0..side),
            rng.gen_range(0.0..side),
        );
        if positions.iter().all(|q| (p - q).norm() >= 1.0) {
            positions.push(p);
        }
    }
    Structure::molecule(positions, carbon(n)).unwrap()
}

/// Triclinic cell with `n` randomly placed atoms.
pub fn random_crystal(rng: &mut ChaCha8Rng, n: usize) -> Structure {
    let cell = Matrix3::new(4.2, 0.0, 0.0, 0.7, 4.5, 0.0, 0.3, 0.5, 4.8);
    let mut positions: Vec<Vector3<f64>> = Vec::with_capacity(n);
    while positions.len() < n {
        let frac = Vector3::new(
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.0..1.0),
        );
        let p = cell.transpose() * frac;
        if positions.iter().all(|q| (p - q).norm() >= 1.2) {
            positions.push(p);
        }
    }
    Structure::new(cell, [true; 3], positions, carbon(n)).unwrap()
}

/// Sorted distances from every atom to all periodic images within
/// `reach` cells along each lattice vector, self excluded.
pub fn brute_force_distances(s: &Structure, reach: i32) -> Vec<Vec<f64>> {
    let cell_t = s.cell().transpose();
    s.positions()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut d = Vec::new();
            for a in -reach..=reach {
                for b in -reach..=reach {
                    for c in -reach..=reach {
                        let shift = cell_t * Vector3::new(a as f64, b as f64, c as f64);
                        for (j, q) in s.positions().iter().enumerate() {
                            if i == j && a == 0 && b == 0 && c == 0 {
                                continue;
                            }
                            d.push((q + shift - p).norm());
                        }
                    }
                }
            }
            d.sort_by(f64::total_cmp);
            d
        })
        .collect()
}

/// Smallest gap between the `k`-th and `(k+1)`-th neighbor distance
/// over all atoms.
pub fn neighbor_shell_gap(s: &Structure, k: usize) -> f64 {
    brute_force_distances(s, 3)
        .iter()
        .map(|d| d[k] - d[k - 1])
        .fold(f64::INFINITY, f64::min)
}

/// Supercell built by replicating atoms with explicit lattice shifts.
pub fn replicate(s: &Structure, reps: [usize; 3]) -> Structure {
    let cell_t = s.cell().transpose();
    let mut positions = Vec::new();
    for a in 0..reps[0] {
        for b in 0..reps[1] {
            for c in 0..reps[2] {
                let shift = cell_t * Vector3::new(a as f64, b as f64, c as f64);
                positions.extend(s.positions().iter().map(|p| p + shift));
            }
        }
    }
    let mut cell = *s.cell();
    for (d, &r) in reps.iter().enumerate() {
        let row = cell.row(d) * r as f64;
        cell.set_row(d, &row);
    }
    let n = positions.len();
    Structure::new(cell, s.pbc(), positions, carbon(n)).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
