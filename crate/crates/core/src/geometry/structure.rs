use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// A periodic or aperiodic collection of atoms.
///
/// Rows of `cell` are the lattice vectors, in Å. For fully aperiodic
/// structures the cell may be zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Structure {
    cell: Matrix3<f64>,
    pbc: [bool; 3],
    positions: Vec<Vector3<f64>>,
    species: Vec<String>,
    forces: Option<Vec<Vector3<f64>>>,
    energy: Option<f64>,
    info: Vec<(String, String)>,
}

impl Structure {
    pub fn new(
        cell: Matrix3<f64>,
        pbc: [bool; 3],
        positions: Vec<Vector3<f64>>,
        species: Vec<String>,
    ) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::input("a structure needs at least one atom"));
        }
        if species.len() != positions.len() {
            return Err(Error::input(format!(
                "{} species for {} positions",
                species.len(),
                positions.len()
            )));
        }
        if let Some(atom) = positions
            .iter()
            .position(|p| !p.iter().all(|x| x.is_finite()))
        {
            return Err(Error::input(format!("non-finite position for atom {atom}")));
        }
        if !cell.iter().all(|x| x.is_finite()) {
            return Err(Error::Cell("non-finite lattice vector".into()));
        }
        if pbc.iter().any(|&p| p) && cell.determinant().abs() <= 0.0 {
            return Err(Error::Cell("periodic cell with zero volume".into()));
        }
        Ok(Structure {
            cell,
            pbc,
            positions,
            species,
            forces: None,
            energy: None,
            info: Vec::new(),
        })
    }

    /// Aperiodic structure with a zero cell.
    pub fn molecule(positions: Vec<Vector3<f64>>, species: Vec<String>) -> Result<Self> {
        Structure::new(Matrix3::zeros(), [false; 3], positions, species)
    }

    pub fn with_forces(mut self, forces: Vec<Vector3<f64>>) -> Result<Self> {
        if forces.len() != self.positions.len() {
            return Err(Error::input(format!(
                "{} force rows for {} atoms",
                forces.len(),
                self.positions.len()
            )));
        }
        self.forces = Some(forces);
        Ok(self)
    }

    pub fn with_energy(mut self, energy: f64) -> Self {
        self.energy = Some(energy);
        self
    }

    /// Extra comment-line key/value pairs, kept for lossless output.
    pub fn with_info(mut self, info: Vec<(String, String)>) -> Self {
        self.info = info;
        self
    }

    pub fn n_atoms(&self) -> usize {
        self.positions.len()
    }

    pub fn cell(&self) -> &Matrix3<f64> {
        &self.cell
    }

    pub fn pbc(&self) -> [bool; 3] {
        self.pbc
    }

    pub fn is_periodic(&self) -> bool {
        self.pbc.iter().any(|&p| p)
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }

    pub fn species(&self) -> &[String] {
        &self.species
    }

    pub fn forces(&self) -> Option<&[Vector3<f64>]> {
        self.forces.as_deref()
    }

    pub fn energy(&self) -> Option<f64> {
        self.energy
    }

    pub fn info(&self) -> &[(String, String)] {
        &self.info
    }

    /// Distance between opposite faces of the cell along each lattice direction.
    pub(crate) fn cell_heights(&self) -> [f64; 3] {
        let a: Vector3<f64> = self.cell.row(0).transpose();
        let b: Vector3<f64> = self.cell.row(1).transpose();
        let c: Vector3<f64> = self.cell.row(2).transpose();
        let volume = self.cell.determinant().abs();
        [
            volume / b.cross(&c).norm(),
            volume / c.cross(&a).norm(),
            volume / a.cross(&b).norm(),
        ]
    }

    /// Positions with fractional coordinates folded into [0, 1) along periodic
    /// directions.
    pub(crate) fn wrapped_positions(&self) -> Vec<Vector3<f64>> {
        if !self.is_periodic() {
            return self.positions.clone();
        }
        let inverse = self
            .cell
            .try_inverse()
            .expect("periodic cells are validated as non-singular");
        self.positions
            .iter()
            .map(|p| {
                let mut frac = inverse.transpose() * p;
                for d in 0..3 {
                    if self.pbc[d] {
                        frac[d] -= frac[d].floor();
                        // floor of -1e-17 leaves exactly 1.0
                        if frac[d] >= 1.0 {
                            frac[d] = 0.0;
                        }
                    }
                }
                self.cell.transpose() * frac
            })
            .collect()
    }

    /// Build the `reps[0] × reps[1] × reps[2]` supercell. Atoms are ordered
    /// by image offset first, then by original index.
    pub fn supercell(&self, reps: [usize; 3]) -> Result<Structure> {
        if reps.contains(&0) {
            return Err(Error::input("supercell repetitions must be positive"));
        }
        let mut positions = Vec::with_capacity(self.n_atoms() * reps.iter().product::<usize>());
        let mut species = Vec::with_capacity(positions.capacity());
        let mut forces = self
            .forces
            .as_ref()
            .map(|_| Vec::with_capacity(positions.capacity()));
        for i in 0..reps[0] {
            for j in 0..reps[1] {
                for l in 0..reps[2] {
                    let shift = self.cell.transpose() * Vector3::new(i as f64, j as f64, l as f64);
                    for (atom, p) in self.positions.iter().enumerate() {
                        positions.push(p + shift);
                        species.push(self.species[atom].clone());
                        if let (Some(out), Some(src)) = (forces.as_mut(), self.forces.as_ref()) {
                            out.push(src[atom]);
                        }
                    }
                }
            }
        }
        let mut cell = self.cell;
        for (d, &r) in reps.iter().enumerate() {
            let row = cell.row(d) * r as f64;
            cell.set_row(d, &row);
        }
        let mut out = Structure::new(cell, self.pbc, positions, species)?;
        out.forces = forces;
        Ok(out)
    }
}

/// An ordered collection of structures.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub name: String,
    pub structures: Vec<Structure>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, structures: Vec<Structure>) -> Self {
        Dataset {
            name: name.into(),
            structures,
        }
    }

    pub fn len(&self) -> usize {
        self.structures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.structures.is_empty()
    }

    /// Total number of atomic environments.
    pub fn n_environments(&self) -> usize {
        self.structures.iter().map(Structure::n_atoms).sum()
    }

    /// New dataset holding the structures at `selection`, in that order.
    pub fn subset(&self, selection: &[usize]) -> Result<Dataset> {
        check_selection(selection, self.len())?;
        Ok(Dataset {
            name: self.name.clone(),
            structures: selection
                .iter()
                .map(|&i| self.structures[i].clone())
                .collect(),
        })
    }
}

/// Validate that indices are unique and smaller than `n`.
pub(crate) fn check_selection(selection: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for &i in selection {
        if i >= n {
            return Err(Error::input(format!(
                "structure index {i} out of range for {n} structures"
            )));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::input(format!("structure index {i} selected twice")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn symbols(n: usize) -> Vec<String> {
        vec!["C".to_string(); n]
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(Structure::molecule(vec![], vec![]).is_err());
        let bad = Structure::molecule(vec![Vector3::new(f64::NAN, 0.0, 0.0)], symbols(1));
        assert!(matches!(bad, Err(Error::Input(_))));
    }

    #[test]
    fn periodic_cell_must_have_volume() {
        let cell = Matrix3::new(1.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        let err = Structure::new(cell, [true; 3], vec![Vector3::zeros()], symbols(1));
        assert!(matches!(err, Err(Error::Cell(_))));
        // aperiodic structures may carry any cell
        assert!(Structure::new(cell, [false; 3], vec![Vector3::zeros()], symbols(1)).is_ok());
    }

    #[test]
    fn forces_must_match_atoms() {
        let s = Structure::molecule(vec![Vector3::zeros(), Vector3::x()], symbols(2)).unwrap();
        assert!(s.clone().with_forces(vec![Vector3::zeros()]).is_err());
        assert!(s.with_forces(vec![Vector3::zeros(); 2]).is_ok());
    }

    #[test]
    fn wrapping_folds_into_cell() {
        let cell = Matrix3::identity() * 2.0;
        let s = Structure::new(
            cell,
            [true, true, false],
            vec![Vector3::new(-0.5, 4.5, 7.0)],
            symbols(1),
        )
        .unwrap();
        let w = s.wrapped_positions()[0];
        assert!((w - Vector3::new(1.5, 0.5, 7.0)).norm() < 1e-12);
    }

    #[test]
    fn heights_of_skewed_cell() {
        let cell = Matrix3::new(2.0, 0.0, 0.0, 1.0, 3.0, 0.0, 0.0, 0.0, 4.0);
        let s = Structure::new(cell, [true; 3], vec![Vector3::zeros()], symbols(1)).unwrap();
        let h = s.cell_heights();
        assert!((h[0] - 3.0 * 2.0 / 10f64.sqrt()).abs() < 1e-12);
        assert!((h[1] - 3.0).abs() < 1e-12);
        assert!((h[2] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn supercell_counts() {
        let s = Structure::new(
            Matrix3::identity() * 3.0,
            [true; 3],
            vec![Vector3::zeros(), Vector3::new(1.0, 1.0, 1.0)],
            symbols(2),
        )
        .unwrap();
        let sc = s.supercell([2, 2, 2]).unwrap();
        assert_eq!(sc.n_atoms(), 16);
        assert!((sc.cell().determinant() - 27.0 * 8.0).abs() < 1e-9);
    }

    #[test]
    fn subset_checks_indices() {
        let s = Structure::molecule(vec![Vector3::zeros()], symbols(1)).unwrap();
        let d = Dataset::new("d", vec![s.clone(), s.clone(), s]);
        assert_eq!(d.subset(&[2, 0]).unwrap().len(), 2);
        assert!(d.subset(&[0, 0]).is_err());
        assert!(d.subset(&[3]).is_err());
    }
}
