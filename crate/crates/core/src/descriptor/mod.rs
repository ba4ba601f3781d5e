//! Atom-centered environment descriptors.
//!
//! Every atom gets a row of width `2k - 1`: `k` two-body terms `w(r)/r` over
//! its sorted neighbor distances, followed by `k - 1` rank-averaged
//! three-body terms `sqrt(w(r_ij) w(r_il)) / r_jl`. Units are Å⁻¹.

mod cache;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{check_selection, nearest_neighbors, Dataset, NeighborSet};

pub use cache::{read_cache, write_cache};

pub const DEFAULT_K: usize = 32;
pub const DEFAULT_CUTOFF: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescriptorParams {
    /// Number of nearest neighbors.
    pub k: usize,
    /// Cutoff radius in Å.
    pub cutoff: f64,
}

impl Default for DescriptorParams {
    fn default() -> Self {
        DescriptorParams {
            k: DEFAULT_K,
            cutoff: DEFAULT_CUTOFF,
        }
    }
}

impl DescriptorParams {
    pub fn new(k: usize, cutoff: f64) -> Result<Self> {
        let params = DescriptorParams { k, cutoff };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::input(format!(
                "k must be at least 2, got {}",
                self.k
            )));
        }
        if !(self.cutoff.is_finite() && self.cutoff > 0.0) {
            return Err(Error::input(format!(
                "cutoff must be positive, got {}",
                self.cutoff
            )));
        }
        Ok(())
    }

    /// Row width, `2k - 1`.
    pub fn width(&self) -> usize {
        2 * self.k - 1
    }
}

/// Borrowed row-major matrix of descriptor rows.
#[derive(Debug, Clone, Copy)]
pub struct Rows<'a> {
    data: &'a [f64],
    width: usize,
}

impl<'a> Rows<'a> {
    pub fn new(data: &'a [f64], width: usize) -> Result<Self> {
        if width == 0 {
            return Err(Error::input("descriptor width must be positive"));
        }
        if !data.len().is_multiple_of(width) {
            return Err(Error::input(format!(
                "{} values do not form rows of width {width}",
                data.len()
            )));
        }
        Ok(Rows { data, width })
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.width
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row(&self, i: usize) -> &'a [f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'a, f64> {
        self.data.chunks_exact(self.width)
    }

    pub fn as_slice(&self) -> &'a [f64] {
        self.data
    }
}

/// Descriptor rows for every environment of a dataset, grouped by structure.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorSet {
    values: Vec<f64>,
    width: usize,
    /// `(start, len)` row range of each structure.
    offsets: Vec<(usize, usize)>,
    params: DescriptorParams,
}

impl DescriptorSet {
    /// Assemble from flat row-major `values` and per-structure row counts.
    pub fn from_parts(
        values: Vec<f64>,
        width: usize,
        sizes: &[usize],
        params: DescriptorParams,
    ) -> Result<Self> {
        let rows = Rows::new(&values, width)?.len();
        if sizes.iter().sum::<usize>() != rows {
            return Err(Error::input(format!(
                "structure sizes sum to {} but there are {rows} rows",
                sizes.iter().sum::<usize>()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("descriptor values must be finite"));
        }
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut start = 0;
        for &len in sizes {
            offsets.push((start, len));
            start += len;
        }
        Ok(DescriptorSet {
            values,
            width,
            offsets,
            params,
        })
    }

    /// Synthetic set: one structure per entry of `structures`, each a list of rows.
    pub fn from_structures(structures: &[Vec<Vec<f64>>]) -> Result<Self> {
        let width = structures
            .iter()
            .flatten()
            .map(Vec::len)
            .next()
            .ok_or_else(|| Error::input("no descriptor rows"))?;
        if structures.iter().flatten().any(|r| r.len() != width) {
            return Err(Error::input("descriptor rows of different widths"));
        }
        let sizes: Vec<usize> = structures.iter().map(Vec::len).collect();
        let values = structures.iter().flatten().flatten().copied().collect();
        let params = DescriptorParams {
            k: width.div_ceil(2),
            cutoff: DEFAULT_CUTOFF,
        };
        DescriptorSet::from_parts(values, width, &sizes, params)
    }

    pub fn rows(&self) -> Rows<'_> {
        Rows {
            data: &self.values,
            width: self.width,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn n_environments(&self) -> usize {
        self.values.len() / self.width
    }

    pub fn n_structures(&self) -> usize {
        self.offsets.len()
    }

    pub fn offsets(&self) -> &[(usize, usize)] {
        &self.offsets
    }

    pub fn params(&self) -> DescriptorParams {
        self.params
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, env: usize) -> &[f64] {
        self.rows().row(env)
    }

    /// Rows belonging to one structure.
    pub fn structure_rows(&self, structure: usize) -> Rows<'_> {
        let (start, len) = self.offsets[structure];
        Rows {
            data: &self.values[start * self.width..(start + len) * self.width],
            width: self.width,
        }
    }

    /// Rows of the selected structures, in selection order.
    pub fn subset(&self, selection: &[usize]) -> Result<DescriptorSet> {
        check_selection(selection, self.n_structures())?;
        let mut values = Vec::new();
        let mut sizes = Vec::with_capacity(selection.len());
        for &s in selection {
            values.extend_from_slice(self.structure_rows(s).as_slice());
            sizes.push(self.offsets[s].1);
        }
        DescriptorSet::from_parts(values, self.width, &sizes, self.params)
    }
}

/// Smooth cutoff `(1 - (r/rc)^2)^2` inside the cutoff, zero outside.
pub fn cutoff_weight(r: f64, cutoff: f64) -> Result<f64> {
    if r.is_nan() || r < 0.0 {
        return Err(Error::input(format!(
            "distance must be non-negative, got {r}"
        )));
    }
    Ok(weight(r, cutoff))
}

#[inline]
fn weight(r: f64, cutoff: f64) -> f64 {
    if r > cutoff {
        return 0.0;
    }
    let x = r / cutoff;
    let s = 1.0 - x * x;
    s * s
}

fn degenerate(nbrs: &NeighborSet, message: impl Into<String>) -> Error {
    Error::DegenerateGeometry {
        structure: 0,
        atom: nbrs.center_index,
        message: message.into(),
    }
}

fn check_k(nbrs: &NeighborSet, params: &DescriptorParams) -> Result<()> {
    if nbrs.k() != params.k {
        return Err(Error::input(format!(
            "neighbor set has {} slots but k = {}",
            nbrs.k(),
            params.k
        )));
    }
    Ok(())
}

/// Two-body block: `w(r_j)/r_j` in ascending-distance order, zero for padding.
pub fn compute_x1(nbrs: &NeighborSet, params: &DescriptorParams) -> Result<Vec<f64>> {
    check_k(nbrs, params)?;
    let mut out = vec![0.0; params.k];
    for (slot, &r) in out.iter_mut().zip(nbrs.valid_distances()) {
        if r <= 0.0 {
            return Err(degenerate(nbrs, "atom coincides with a neighbor"));
        }
        *slot = weight(r, params.cutoff) / r;
    }
    Ok(out)
}

/// Three-body block of length `k - 1`.
///
/// Each valid neighbor `j` contributes the descending list of
/// `sqrt(w_j w_l) / r_jl` over the other valid neighbors `l`; the lists are
/// averaged rank by rank over `j`. The result is non-increasing.
pub fn compute_x2(nbrs: &NeighborSet, params: &DescriptorParams) -> Result<Vec<f64>> {
    check_k(nbrs, params)?;
    let m = nbrs.valid_count;
    let mut out = vec![0.0; params.k - 1];
    if m < 2 {
        return Ok(out);
    }
    let weights: Vec<f64> = nbrs
        .valid_distances()
        .iter()
        .map(|&r| weight(r, params.cutoff))
        .collect();
    let positions = &nbrs.neighbor_positions;
    let mut terms = Vec::with_capacity(m - 1);
    for j in 0..m {
        terms.clear();
        for l in 0..m {
            if l == j {
                continue;
            }
            let r = (positions[j] - positions[l]).norm();
            if r <= 0.0 {
                return Err(degenerate(nbrs, "two neighbors coincide"));
            }
            terms.push((weights[j] * weights[l]).sqrt() / r);
        }
        terms.sort_unstable_by(|a, b| b.total_cmp(a));
        for (slot, t) in out.iter_mut().zip(&terms) {
            *slot += t;
        }
    }
    for slot in out.iter_mut() {
        *slot /= m as f64;
    }
    out.sort_unstable_by(|a, b| b.total_cmp(a));
    Ok(out)
}

/// Full descriptor row for one environment.
pub fn compute_row(nbrs: &NeighborSet, params: &DescriptorParams) -> Result<Vec<f64>> {
    let mut row = compute_x1(nbrs, params)?;
    row.extend(compute_x2(nbrs, params)?);
    Ok(row)
}

/// Descriptor rows for every atom of every structure, in dataset order.
pub fn build_descriptor_set(dataset: &Dataset, params: &DescriptorParams) -> Result<DescriptorSet> {
    params.validate()?;
    let per_structure: Vec<Vec<f64>> = dataset
        .structures
        .par_iter()
        .enumerate()
        .map(|(index, structure)| {
            let rows = nearest_neighbors(structure, params.k, params.cutoff)
                .and_then(|nbrs| {
                    let mut values = Vec::with_capacity(nbrs.len() * params.width());
                    for set in &nbrs {
                        values.extend(compute_row(set, params)?);
                    }
                    Ok(values)
                })
                .map_err(|e| e.in_structure(index))?;
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let sizes: Vec<usize> = dataset.structures.iter().map(|s| s.n_atoms()).collect();
    DescriptorSet::from_parts(per_structure.concat(), params.width(), &sizes, *params)
}

#[cfg(test)]
mod tests {
    use nalgebra::{Matrix3, Rotation3, Vector3};

    use super::*;
    use crate::geometry::Structure;

    fn carbon(n: usize) -> Vec<String> {
        vec!["C".to_string(); n]
    }

    fn params(k: usize) -> DescriptorParams {
        DescriptorParams::new(k, 5.0).unwrap()
    }

    fn neighbors(positions: Vec<Vector3<f64>>, k: usize) -> Vec<NeighborSet> {
        let n = positions.len();
        let s = Structure::molecule(positions, carbon(n)).unwrap();
        nearest_neighbors(&s, k, 5.0).unwrap()
    }

    #[test]
    fn cutoff_weight_values() {
        assert_eq!(cutoff_weight(0.0, 5.0).unwrap(), 1.0);
        assert_eq!(cutoff_weight(5.0, 5.0).unwrap(), 0.0);
        assert_eq!(cutoff_weight(7.0, 5.0).unwrap(), 0.0);
        // (1 - 0.25)^2
        assert!((cutoff_weight(2.5, 5.0).unwrap() - 0.5625).abs() < 1e-15);
        assert!(cutoff_weight(-0.1, 5.0).is_err());
    }

    #[test]
    fn cutoff_weight_is_c1_at_cutoff() {
        let h = 1e-6;
        let inside = cutoff_weight(5.0 - h, 5.0).unwrap();
        assert!(inside < 1e-10);
        let slope =
            (cutoff_weight(5.0 - h, 5.0).unwrap() - cutoff_weight(5.0 - 2.0 * h, 5.0).unwrap()) / h;
        assert!(slope.abs() < 1e-5);
    }

    #[test]
    fn dimer_two_body_block() {
        let nbrs = neighbors(vec![Vector3::zeros(), Vector3::new(2.0, 0.0, 0.0)], 32);
        let x1 = compute_x1(&nbrs[0], &params(32)).unwrap();
        assert_eq!(x1.len(), 32);
        assert!((x1[0] - 0.3528).abs() < 1e-12);
        assert!(x1[1..].iter().all(|&v| v == 0.0));
        let x2 = compute_x2(&nbrs[0], &params(32)).unwrap();
        assert_eq!(x2.len(), 31);
        assert!(x2.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn isolated_atom_is_all_zero() {
        let nbrs = neighbors(vec![Vector3::zeros()], 4);
        let row = compute_row(&nbrs[0], &params(4)).unwrap();
        assert_eq!(row, vec![0.0; 7]);
    }

    #[test]
    fn neighbors_past_cutoff_contribute_zero() {
        let nbrs = neighbors(
            vec![
                Vector3::zeros(),
                Vector3::new(1.5, 0.0, 0.0),
                Vector3::new(0.0, 6.0, 0.0),
            ],
            4,
        );
        let x1 = compute_x1(&nbrs[0], &params(4)).unwrap();
        assert!(x1[0] > 0.0);
        assert_eq!(x1[1], 0.0);
    }

    #[test]
    fn triangle_three_body_closed_form() {
        // center at origin, neighbors at distance r, separated by d
        let r = 1.7_f64;
        let angle = 1.1_f64;
        let p1 = Vector3::new(r, 0.0, 0.0);
        let p2 = Vector3::new(r * angle.cos(), r * angle.sin(), 0.0);
        let d = (p1 - p2).norm();
        let nbrs = neighbors(vec![Vector3::zeros(), p1, p2], 4);
        let x2 = compute_x2(&nbrs[0], &params(4)).unwrap();
        let w = (1.0 - (r / 5.0).powi(2)).powi(2);
        assert!((x2[0] - w / d).abs() < 1e-12);
        assert_eq!(&x2[1..], &[0.0, 0.0]);
    }

    #[test]
    fn square_planar_label_permutation() {
        let a = 1.9;
        let ring = [
            Vector3::new(a, 0.0, 0.0),
            Vector3::new(0.0, a, 0.0),
            Vector3::new(-a, 0.0, 0.0),
            Vector3::new(0.0, -a, 0.0),
        ];
        let reference = {
            let mut p = vec![Vector3::zeros()];
            p.extend(ring);
            compute_row(&neighbors(p, 8)[0], &params(8)).unwrap()
        };
        for perm in [[3, 2, 1, 0], [1, 3, 0, 2], [2, 0, 3, 1]] {
            let mut p = vec![Vector3::zeros()];
            p.extend(perm.iter().map(|&i| ring[i]));
            let row = compute_row(&neighbors(p, 8)[0], &params(8)).unwrap();
            for (x, y) in row.iter().zip(&reference) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn three_body_block_is_non_increasing() {
        let s = Structure::molecule(
            vec![
                Vector3::zeros(),
                Vector3::new(1.1, 0.2, 0.0),
                Vector3::new(-0.3, 1.4, 0.5),
                Vector3::new(0.2, -0.9, 1.3),
                Vector3::new(2.5, 2.0, -1.0),
                Vector3::new(-2.2, 0.4, -0.8),
            ],
            carbon(6),
        )
        .unwrap();
        for set in nearest_neighbors(&s, 8, 5.0).unwrap() {
            let x2 = compute_x2(&set, &params(8)).unwrap();
            assert!(x2.windows(2).all(|w| w[0] >= w[1]));
            assert!(x2.iter().all(|v| *v >= 0.0 && v.is_finite()));
        }
    }

    #[test]
    fn coincident_atoms_fail() {
        let s = Structure::molecule(
            vec![Vector3::zeros(), Vector3::zeros(), Vector3::x()],
            carbon(3),
        )
        .unwrap();
        let d = Dataset::new("bad", vec![s.clone(), s]);
        match build_descriptor_set(&d, &params(4)) {
            Err(Error::DegenerateGeometry { structure, .. }) => assert_eq!(structure, 0),
            other => panic!("expected degenerate geometry, got {other:?}"),
        }
    }

    #[test]
    fn offsets_follow_structure_sizes() {
        let mk = |n: usize| {
            let positions = (0..n)
                .map(|i| Vector3::new(1.3 * i as f64, 0.0, 0.0))
                .collect();
            Structure::molecule(positions, carbon(n)).unwrap()
        };
        let d = Dataset::new("d", vec![mk(2), mk(3), mk(4)]);
        let set = build_descriptor_set(&d, &params(4)).unwrap();
        assert_eq!(set.n_environments(), 9);
        assert_eq!(set.offsets(), &[(0, 2), (2, 3), (5, 4)]);
        assert_eq!(set.width(), 7);
        let sub = set.subset(&[2, 0]).unwrap();
        assert_eq!(sub.offsets(), &[(0, 4), (4, 2)]);
        assert_eq!(sub.row(0), set.row(5));
    }

    #[test]
    fn rotation_leaves_rows_unchanged() {
        let positions = vec![
            Vector3::zeros(),
            Vector3::new(1.2, 0.3, -0.1),
            Vector3::new(-0.4, 1.5, 0.2),
            Vector3::new(0.7, -0.8, 1.6),
        ];
        let rot = Rotation3::from_euler_angles(0.3, -1.2, 2.1);
        let rotated = positions.iter().map(|p| rot * p).collect();
        let a = Dataset::new(
            "a",
            vec![Structure::molecule(positions, carbon(4)).unwrap()],
        );
        let b = Dataset::new("b", vec![Structure::molecule(rotated, carbon(4)).unwrap()]);
        let da = build_descriptor_set(&a, &params(4)).unwrap();
        let db = build_descriptor_set(&b, &params(4)).unwrap();
        for (x, y) in da.values().iter().zip(db.values()) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn species_do_not_enter() {
        let positions = vec![
            Vector3::zeros(),
            Vector3::new(1.2, 0.3, -0.1),
            Vector3::new(0.0, 2.0, 0.0),
        ];
        let a = Structure::molecule(positions.clone(), carbon(3)).unwrap();
        let b = Structure::molecule(positions, vec!["H".into(), "O".into(), "Fe".into()]).unwrap();
        let p = params(4);
        let da = build_descriptor_set(&Dataset::new("a", vec![a]), &p).unwrap();
        let db = build_descriptor_set(&Dataset::new("b", vec![b]), &p).unwrap();
        assert_eq!(da.values(), db.values());
    }

    #[test]
    fn periodic_rows_are_finite_and_positive() {
        let s = Structure::new(
            Matrix3::identity() * 2.0,
            [true; 3],
            vec![Vector3::zeros()],
            carbon(1),
        )
        .unwrap();
        let set = build_descriptor_set(&Dataset::new("sc", vec![s]), &DescriptorParams::default())
            .unwrap();
        assert_eq!(set.width(), 63);
        assert!(set.values().iter().all(|v| v.is_finite() && *v >= 0.0));
        assert!(set.values()[0] > 0.0);
    }

    #[test]
    fn invalid_params() {
        assert!(DescriptorParams::new(1, 5.0).is_err());
        assert!(DescriptorParams::new(4, 0.0).is_err());
    }

    #[test]
    fn synthetic_sets_validate_shapes() {
        assert!(DescriptorSet::from_structures(&[vec![vec![0.0, 1.0]], vec![vec![1.0]]]).is_err());
        let set = DescriptorSet::from_structures(&[
            vec![vec![0.0, 1.0], vec![2.0, 3.0]],
            vec![vec![4.0, 5.0]],
        ])
        .unwrap();
        assert_eq!(set.structure_rows(1).row(0), &[4.0, 5.0]);
    }
}
