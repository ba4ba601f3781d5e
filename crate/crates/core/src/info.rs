//! Gaussian-kernel information measures over descriptor rows, in nats.
//!
//! All kernel sums are accumulated in log space with a running max shift, so
//! a query far from every reference gives a large finite δH instead of
//! `log 0`. For a given query, references are always visited in index order,
//! which keeps results bit-identical for any thread count.

use rayon::prelude::*;

use crate::descriptor::{DescriptorSet, Rows};
use crate::error::{Error, Result};

pub const DEFAULT_BANDWIDTH: f64 = 0.015;

const QUERY_BLOCK: usize = 64;
const REF_TILE: usize = 256;

/// Gaussian kernel bandwidth, in Å⁻¹.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub bandwidth: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams {
            bandwidth: DEFAULT_BANDWIDTH,
        }
    }
}

impl KernelParams {
    pub fn new(bandwidth: f64) -> Result<Self> {
        let params = KernelParams { bandwidth };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth.is_finite() && self.bandwidth > 0.0) {
            return Err(Error::input(format!(
                "bandwidth must be positive, got {}",
                self.bandwidth
            )));
        }
        Ok(())
    }

    /// Factor mapping a squared distance to the log kernel, `-1 / 2h²`.
    pub(crate) fn log_kernel_scale(&self) -> f64 {
        -0.5 / (self.bandwidth * self.bandwidth)
    }
}

/// Streaming log-sum-exp.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogSumExp {
    max: f64,
    sum: f64,
}

impl LogSumExp {
    pub(crate) fn new() -> Self {
        LogSumExp {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    #[inline]
    pub(crate) fn push(&mut self, x: f64) {
        if x <= self.max {
            self.sum += (x - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    pub(crate) fn value(&self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_pair(queries: Rows<'_>, refs: Rows<'_>) -> Result<()> {
    if queries.width() != refs.width() {
        return Err(Error::input(format!(
            "descriptor widths differ: {} vs {}",
            queries.width(),
            refs.width()
        )));
    }
    if refs.is_empty() {
        return Err(Error::input("reference set is empty"));
    }
    Ok(())
}

/// `log Σ_j exp(-‖q - r_j‖² / 2h²)` for every query row.
pub(crate) fn log_kernel_sums(
    queries: Rows<'_>,
    refs: Rows<'_>,
    kernel: KernelParams,
) -> Result<Vec<f64>> {
    kernel.validate()?;
    check_pair(queries, refs)?;
    let scale = kernel.log_kernel_scale();
    let mut out = vec![0.0; queries.len()];
    out.par_chunks_mut(QUERY_BLOCK)
        .enumerate()
        .for_each(|(block, chunk)| {
            let first = block * QUERY_BLOCK;
            let mut acc = vec![LogSumExp::new(); chunk.len()];
            for tile in (0..refs.len()).step_by(REF_TILE) {
                let end = (tile + REF_TILE).min(refs.len());
                for (offset, a) in acc.iter_mut().enumerate() {
                    let q = queries.row(first + offset);
                    for r in tile..end {
                        a.push(scale * squared_distance(q, refs.row(r)));
                    }
                }
            }
            for (slot, a) in chunk.iter_mut().zip(&acc) {
                *slot = a.value();
            }
        });
    Ok(out)
}

/// `-log Σ_i K_h(query, X_i)`.
pub fn neg_log_kernel_sum(query: &[f64], refs: Rows<'_>, kernel: KernelParams) -> Result<f64> {
    let query = Rows::new(query, refs.width().max(1))?;
    if query.len() != 1 {
        return Err(Error::input(
            "query must be a single row of the reference width",
        ));
    }
    Ok(-log_kernel_sums(query, refs, kernel)?[0])
}

/// Differential entropy δH of each query against `refs`. Negative or zero
/// values mean the query is already represented by the references.
pub fn delta_entropy(queries: Rows<'_>, refs: Rows<'_>, kernel: KernelParams) -> Result<Vec<f64>> {
    let mut out = log_kernel_sums(queries, refs, kernel)?;
    for v in &mut out {
        *v = -*v;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyResult {
    pub entropy_nats: f64,
    pub n_env: usize,
    /// δH of every row against the whole set (self term included).
    pub per_point_dh: Option<Vec<f64>>,
}

impl EntropyResult {
    /// Diversity of the same set, from the stored δH values.
    pub fn diversity(&self) -> Option<f64> {
        self.per_point_dh.as_deref().map(log_sum_exp)
    }
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let mut acc = LogSumExp::new();
    for &v in values {
        acc.push(v);
    }
    acc.value()
}

/// Kernel-density information entropy
/// `H = -(1/N) Σ_i log[(1/N) Σ_j K_h(X_i, X_j)]`.
pub fn entropy(set: Rows<'_>, kernel: KernelParams) -> Result<EntropyResult> {
    if set.is_empty() {
        return Err(Error::input("entropy of an empty set"));
    }
    let dh = delta_entropy(set, set, kernel)?;
    let n = set.len() as f64;
    let log_n = n.ln();
    // log of the normalized density at each point; exactly zero for degenerate sets
    let log_density_sum: f64 = dh.iter().map(|&d| -d - log_n).sum();
    Ok(EntropyResult {
        entropy_nats: -log_density_sum / n + 0.0,
        n_env: set.len(),
        per_point_dh: Some(dh),
    })
}

/// Diversity `D = log Σ_i exp(δH(X_i | set))`.
pub fn diversity(set: Rows<'_>, kernel: KernelParams) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::input("diversity of an empty set"));
    }
    Ok(log_sum_exp(&delta_entropy(set, set, kernel)?))
}

/// Fraction of query rows with δH ≤ 0 against `refs`.
pub fn overlap(queries: Rows<'_>, refs: Rows<'_>, kernel: KernelParams) -> Result<f64> {
    if queries.is_empty() {
        return Err(Error::input("overlap of an empty query set"));
    }
    let dh = delta_entropy(queries, refs, kernel)?;
    Ok(contained_fraction(&dh))
}

pub(crate) fn contained_fraction(dh: &[f64]) -> f64 {
    dh.iter().filter(|&&v| v <= 0.0).count() as f64 / dh.len() as f64
}

/// Entropy divided by its maximum, `log N`.
pub fn efficiency(set: Rows<'_>, kernel: KernelParams) -> Result<f64> {
    if set.len() < 2 {
        return Err(Error::input("efficiency needs at least two environments"));
    }
    Ok(entropy(set, kernel)?.entropy_nats / (set.len() as f64).ln())
}

/// Entropy of each structure's own environments.
pub fn per_structure_entropy(descs: &DescriptorSet, kernel: KernelParams) -> Result<Vec<f64>> {
    kernel.validate()?;
    (0..descs.n_structures())
        .into_par_iter()
        .map(|s| entropy(descs.structure_rows(s), kernel).map(|r| r.entropy_nats))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const H: f64 = 0.015;

    fn kernel() -> KernelParams {
        KernelParams::new(H).unwrap()
    }

    fn rows(data: &[f64], width: usize) -> Rows<'_> {
        Rows::new(data, width).unwrap()
    }

    /// Points on a line spaced `gap * h` apart.
    fn spaced(n: usize, gap: f64) -> Vec<f64> {
        (0..n).map(|i| i as f64 * gap * H).collect()
    }

    #[test]
    fn self_query_is_zero() {
        let data = [0.3, 0.1];
        assert_eq!(
            neg_log_kernel_sum(&data, rows(&data, 2), kernel()).unwrap(),
            0.0
        );
    }

    #[test]
    fn single_reference_closed_form() {
        let refs = [0.0];
        let v = neg_log_kernel_sum(&[0.015], rows(&refs, 1), kernel()).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
        let v = neg_log_kernel_sum(&[10.0 * H], rows(&refs, 1), kernel()).unwrap();
        assert!((v - 50.0).abs() < 1e-9);
    }

    #[test]
    fn identical_references() {
        let refs = [0.2; 5];
        let v = neg_log_kernel_sum(&[0.2], rows(&refs, 1), kernel()).unwrap();
        assert!((v + 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn far_query_stays_finite() {
        let refs = [0.0];
        let v = neg_log_kernel_sum(&[1e3], rows(&refs, 1), kernel()).unwrap();
        assert!(v.is_finite() && v > 1e9);
    }

    #[test]
    fn empty_reference_is_an_error() {
        let refs: [f64; 0] = [];
        assert!(neg_log_kernel_sum(&[0.0], rows(&refs, 1), kernel()).is_err());
        assert!(delta_entropy(rows(&[0.0], 1), rows(&refs, 1), kernel()).is_err());
    }

    #[test]
    fn width_mismatch_is_an_error() {
        assert!(delta_entropy(rows(&[0.0, 1.0], 2), rows(&[0.0], 1), kernel()).is_err());
    }

    #[test]
    fn entropy_limits() {
        assert_eq!(
            entropy(rows(&[0.4], 1), kernel()).unwrap().entropy_nats,
            0.0
        );
        assert_eq!(
            entropy(rows(&[0.4; 7], 1), kernel()).unwrap().entropy_nats,
            0.0
        );
        let far = spaced(12, 100.0);
        let h = entropy(rows(&far, 1), kernel()).unwrap().entropy_nats;
        assert!((h - 12f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn diversity_limits() {
        assert_eq!(diversity(rows(&[0.4], 1), kernel()).unwrap(), 0.0);
        assert!(diversity(rows(&[0.4; 9], 1), kernel()).unwrap().abs() < 1e-12);
        let far = spaced(9, 100.0);
        assert!((diversity(rows(&far, 1), kernel()).unwrap() - 9f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn overlap_cases() {
        let a = spaced(6, 100.0);
        assert_eq!(overlap(rows(&a, 1), rows(&a, 1), kernel()).unwrap(), 1.0);
        let b: Vec<f64> = a.iter().map(|x| x + 10.0).collect();
        assert_eq!(overlap(rows(&b, 1), rows(&a, 1), kernel()).unwrap(), 0.0);
        // half the queries are references, half are far away
        let mixed: Vec<f64> = a[..3].iter().chain(&b[..3]).copied().collect();
        assert_eq!(
            overlap(rows(&mixed, 1), rows(&a, 1), kernel()).unwrap(),
            0.5
        );
        let empty: [f64; 0] = [];
        assert!(overlap(rows(&empty, 1), rows(&a, 1), kernel()).is_err());
    }

    #[test]
    fn efficiency_cases() {
        let far = spaced(5, 100.0);
        assert!((efficiency(rows(&far, 1), kernel()).unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(efficiency(rows(&[0.1; 4], 1), kernel()).unwrap(), 0.0);
        assert!(efficiency(rows(&[0.1], 1), kernel()).is_err());
    }

    #[test]
    fn per_structure_cases() {
        let set = DescriptorSet::from_structures(&[
            vec![vec![0.1]],
            vec![vec![0.2], vec![0.2], vec![0.2]],
            vec![vec![0.0], vec![100.0 * H]],
        ])
        .unwrap();
        let hs = per_structure_entropy(&set, kernel()).unwrap();
        assert_eq!(hs[0], 0.0);
        assert_eq!(hs[1], 0.0);
        assert!((hs[2] - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn streaming_lse_matches_direct() {
        let xs = [-3.0, 1.0, -700.0, 0.5, 2.0];
        let direct = xs.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&xs) - direct).abs() < 1e-14);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn invalid_bandwidth() {
        assert!(KernelParams::new(0.0).is_err());
        assert!(KernelParams::new(f64::NAN).is_err());
    }
}
