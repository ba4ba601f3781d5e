use crate::error::{Error, Result};
use crate::geometry::{check_selection, Dataset};

/// Number of thresholds in the default grid.
pub const DEFAULT_CDF_POINTS: usize = 256;
/// The default grid starts at this percentile of the full force distribution.
const DEFAULT_CDF_PERCENTILE: f64 = 80.0;

/// Empirical CDF of per-atom force magnitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceCdf {
    /// Strictly ascending, eV/Å.
    pub thresholds: Vec<f64>,
    /// Fraction of atoms with `|F| < threshold`.
    pub cdf: Vec<f64>,
    /// Largest force magnitude retained.
    pub max_force: f64,
    pub n_atoms: usize,
}

/// `‖F‖₂` of every atom of the selected structures, in selection order.
pub fn force_magnitudes(dataset: &Dataset, selection: &[usize]) -> Result<Vec<f64>> {
    check_selection(selection, dataset.len())?;
    let mut out = Vec::new();
    for &s in selection {
        let forces = dataset.structures[s]
            .forces()
            .ok_or(Error::MissingForces { structure: s })?;
        out.extend(forces.iter().map(|f| f.norm()));
    }
    Ok(out)
}

pub fn force_cdf(dataset: &Dataset, selection: &[usize], thresholds: &[f64]) -> Result<ForceCdf> {
    if thresholds.is_empty() {
        return Err(Error::input("no CDF thresholds"));
    }
    if thresholds.windows(2).any(|w| w[0] >= w[1]) || thresholds.iter().any(|t| !t.is_finite()) {
        return Err(Error::input(
            "CDF thresholds must be finite and strictly ascending",
        ));
    }
    let mut magnitudes = force_magnitudes(dataset, selection)?;
    if magnitudes.is_empty() {
        return Err(Error::input("no atoms selected"));
    }
    magnitudes.sort_by(f64::total_cmp);
    let n = magnitudes.len();
    let cdf = thresholds
        .iter()
        .map(|&t| magnitudes.partition_point(|&m| m < t) as f64 / n as f64)
        .collect();
    Ok(ForceCdf {
        thresholds: thresholds.to_vec(),
        cdf,
        max_force: magnitudes[n - 1],
        n_atoms: n,
    })
}

/// Percentile `q` in [0, 100] with linear interpolation between order
/// statistics.
pub fn percentile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::input("percentile of an empty list"));
    }
    if !(0.0..=100.0).contains(&q) {
        return Err(Error::input(format!("percentile {q} outside [0, 100]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let position = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = position.floor() as usize;
    let hi = position.ceil() as usize;
    Ok(sorted[lo] + (sorted[hi] - sorted[lo]) * (position - lo as f64))
}

/// Evenly spaced thresholds from the 80th percentile of all force
/// magnitudes in `dataset` to their maximum.
pub fn default_thresholds(dataset: &Dataset) -> Result<Vec<f64>> {
    let all: Vec<usize> = (0..dataset.len()).collect();
    let magnitudes = force_magnitudes(dataset, &all)?;
    let start = percentile(&magnitudes, DEFAULT_CDF_PERCENTILE)?;
    let end = magnitudes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if end <= start {
        return Ok(vec![end]);
    }
    let step = (end - start) / (DEFAULT_CDF_POINTS - 1) as f64;
    let mut grid: Vec<f64> = (0..DEFAULT_CDF_POINTS)
        .map(|i| start + step * i as f64)
        .collect();
    grid[DEFAULT_CDF_POINTS - 1] = end;
    grid.dedup();
    Ok(grid)
}
