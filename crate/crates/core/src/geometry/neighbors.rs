use std::cmp::Ordering;

use nalgebra::Vector3;
use rayon::prelude::*;

use super::Structure;
use crate::error::{Error, Result};

/// Periodic images of every atom, as needed for a neighbor search.
#[derive(Debug, Clone)]
pub struct PeriodicImages {
    pub positions: Vec<Vector3<f64>>,
    /// Index of the original atom of each image.
    pub atoms: Vec<usize>,
    /// Lattice offset of each image.
    pub offsets: Vec<[i32; 3]>,
    /// Number of images on each side of the home cell, per direction.
    pub repeats: [i32; 3],
}

/// Image-replicated point set covering every image that can lie within
/// `search_radius` of any point of the home cell.
///
/// Atoms are folded into the home cell first; images are ordered by lattice
/// offset (lexicographic), then by atom index.
pub fn replicate_for_search(structure: &Structure, search_radius: f64) -> Result<PeriodicImages> {
    if !(search_radius.is_finite() && search_radius > 0.0) {
        return Err(Error::input(format!(
            "search radius must be positive, got {search_radius}"
        )));
    }
    let home = structure.wrapped_positions();
    let heights = structure.cell_heights();
    let pbc = structure.pbc();
    let mut repeats = [0i32; 3];
    for d in 0..3 {
        if pbc[d] {
            // an image in cell m is at least (|m| - 1) heights away from the home cell
            repeats[d] = (search_radius / heights[d]).floor() as i32 + 1;
        }
    }

    let n_cells: usize = repeats.iter().map(|&r| 2 * r as usize + 1).product();
    let mut images = PeriodicImages {
        positions: Vec::with_capacity(n_cells * home.len()),
        atoms: Vec::with_capacity(n_cells * home.len()),
        offsets: Vec::with_capacity(n_cells * home.len()),
        repeats,
    };
    let lattice = structure.cell().transpose();
    for i in -repeats[0]..=repeats[0] {
        for j in -repeats[1]..=repeats[1] {
            for l in -repeats[2]..=repeats[2] {
                let shift = lattice * Vector3::new(i as f64, j as f64, l as f64);
                for (atom, p) in home.iter().enumerate() {
                    images.positions.push(p + shift);
                    images.atoms.push(atom);
                    images.offsets.push([i, j, l]);
                }
            }
        }
    }
    Ok(images)
}

/// The k nearest neighbors of one atom.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSet {
    pub center_index: usize,
    /// `k` distances in ascending order; slots past `valid_count` hold
    /// `f64::INFINITY`.
    pub distances: Vec<f64>,
    /// Cartesian positions of the `valid_count` neighbor images, in the
    /// frame of the center atom's input position.
    pub neighbor_positions: Vec<Vector3<f64>>,
    /// Original atom index and lattice offset of each valid neighbor.
    pub neighbor_images: Vec<(usize, [i32; 3])>,
    pub valid_count: usize,
}

impl NeighborSet {
    pub fn k(&self) -> usize {
        self.distances.len()
    }

    pub fn valid_distances(&self) -> &[f64] {
        &self.distances[..self.valid_count]
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    distance: f64,
    image: usize,
}

/// Counting-sort grid over image positions; each bin is at least as wide as
/// the query radius along every axis.
struct CellGrid {
    origin: Vector3<f64>,
    bin: [f64; 3],
    dims: [usize; 3],
    starts: Vec<usize>,
    members: Vec<usize>,
}

const MAX_BINS_PER_AXIS: usize = 64;

impl CellGrid {
    fn new(points: &[Vector3<f64>], radius: f64) -> Self {
        let mut lo = Vector3::repeat(f64::INFINITY);
        let mut hi = Vector3::repeat(f64::NEG_INFINITY);
        for p in points {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let mut dims = [1usize; 3];
        let mut bin = [f64::INFINITY; 3];
        for d in 0..3 {
            let extent = hi[d] - lo[d];
            let n = ((extent / radius).floor() as usize).clamp(1, MAX_BINS_PER_AXIS);
            dims[d] = n;
            if n > 1 {
                bin[d] = extent / n as f64;
            }
        }
        let mut grid = CellGrid {
            origin: lo,
            bin,
            dims,
            starts: vec![0; dims.iter().product::<usize>() + 1],
            members: vec![0; points.len()],
        };
        let keys: Vec<usize> = points.iter().map(|p| grid.flat(grid.bin_of(p))).collect();
        for &key in &keys {
            grid.starts[key + 1] += 1;
        }
        for b in 0..grid.starts.len() - 1 {
            grid.starts[b + 1] += grid.starts[b];
        }
        let mut fill = grid.starts.clone();
        for (index, &key) in keys.iter().enumerate() {
            grid.members[fill[key]] = index;
            fill[key] += 1;
        }
        grid
    }

    fn bin_of(&self, p: &Vector3<f64>) -> [usize; 3] {
        let mut b = [0usize; 3];
        for d in 0..3 {
            if self.dims[d] > 1 {
                let x = ((p[d] - self.origin[d]) / self.bin[d]).floor();
                b[d] = (x.max(0.0) as usize).min(self.dims[d] - 1);
            }
        }
        b
    }

    fn flat(&self, b: [usize; 3]) -> usize {
        (b[0] * self.dims[1] + b[1]) * self.dims[2] + b[2]
    }

    fn for_each_near(&self, p: &Vector3<f64>, mut f: impl FnMut(usize)) {
        let center = self.bin_of(p);
        let range = |d: usize| {
            let lo = center[d].saturating_sub(1);
            let hi = (center[d] + 1).min(self.dims[d] - 1);
            lo..=hi
        };
        for i in range(0) {
            for j in range(1) {
                for l in range(2) {
                    let key = self.flat([i, j, l]);
                    for &m in &self.members[self.starts[key]..self.starts[key + 1]] {
                        f(m);
                    }
                }
            }
        }
    }
}

fn compare_candidates(images: &PeriodicImages, a: &Candidate, b: &Candidate) -> Ordering {
    a.distance
        .total_cmp(&b.distance)
        .then(images.atoms[a.image].cmp(&images.atoms[b.image]))
        .then(images.offsets[a.image].cmp(&images.offsets[b.image]))
}

/// The `k` nearest periodic images of every atom, excluding each atom's own
/// zero-offset image.
///
/// The search starts at `search_radius` and doubles the radius for atoms that
/// have not found enough neighbors, so periodic structures always yield
/// exactly `k` valid neighbors. Aperiodic structures yield
/// `min(k, N - 1)`. Ties are broken by atom index, then lattice offset.
pub fn nearest_neighbors(
    structure: &Structure,
    k: usize,
    search_radius: f64,
) -> Result<Vec<NeighborSet>> {
    if k == 0 {
        return Err(Error::input("k must be at least 1"));
    }
    let n_atoms = structure.n_atoms();
    let needed = if structure.is_periodic() {
        k
    } else {
        k.min(n_atoms - 1)
    };
    let home = structure.wrapped_positions();

    let mut found: Vec<Option<NeighborSet>> = vec![None; n_atoms];
    let mut radius = search_radius;
    loop {
        let images = replicate_for_search(structure, radius)?;
        let grid = CellGrid::new(&images.positions, radius);
        let pending: Vec<usize> = (0..n_atoms).filter(|&i| found[i].is_none()).collect();
        let results: Vec<(usize, Option<NeighborSet>)> = pending
            .par_iter()
            .map(|&atom| {
                let center = home[atom];
                let mut candidates = Vec::new();
                grid.for_each_near(&center, |image| {
                    if images.atoms[image] == atom && images.offsets[image] == [0, 0, 0] {
                        return;
                    }
                    let distance = (images.positions[image] - center).norm();
                    if distance <= radius {
                        candidates.push(Candidate { distance, image });
                    }
                });
                if candidates.len() < needed {
                    return (atom, None);
                }
                candidates.sort_unstable_by(|a, b| compare_candidates(&images, a, b));
                candidates.truncate(needed);
                let shift = structure.positions()[atom] - center;
                let mut distances: Vec<f64> = candidates.iter().map(|c| c.distance).collect();
                distances.resize(k, f64::INFINITY);
                let set = NeighborSet {
                    center_index: atom,
                    distances,
                    neighbor_positions: candidates
                        .iter()
                        .map(|c| images.positions[c.image] + shift)
                        .collect(),
                    neighbor_images: candidates
                        .iter()
                        .map(|c| (images.atoms[c.image], images.offsets[c.image]))
                        .collect(),
                    valid_count: needed,
                };
                (atom, Some(set))
            })
            .collect();
        for (atom, set) in results {
            found[atom] = set;
        }
        if found.iter().all(Option::is_some) {
            break;
        }
        radius *= 2.0;
    }
    Ok(found
        .into_iter()
        .map(|s| s.expect("all atoms resolved"))
        .collect())
}
