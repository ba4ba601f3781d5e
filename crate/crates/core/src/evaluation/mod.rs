//! Figures of merit for a compressed dataset against its parent.

mod forces;

use rayon::prelude::*;

use crate::descriptor::DescriptorSet;
use crate::error::{Error, Result};
use crate::geometry::check_selection;
use crate::info::{contained_fraction, delta_entropy, entropy, KernelParams};
use crate::io::{MetricBlock, Parameters};
use crate::samplers::{run_sampler, Method, SamplerConfig, Target};

pub use forces::{
    default_thresholds, force_cdf, force_magnitudes, percentile, ForceCdf, DEFAULT_CDF_POINTS,
};

pub const HISTOGRAM_MIN: f64 = -20.0;
pub const HISTOGRAM_MAX: f64 = 20.0;
pub const HISTOGRAM_BIN: f64 = 0.5;
/// δH above which an environment counts as far outside the reference set.
pub const FAR_THRESHOLD: f64 = 10.0;

/// Fixed-width histogram of δH values with explicit edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Values below the first edge.
    pub below: u64,
    /// Values above the last edge.
    pub above: u64,
}

impl Histogram {
    /// Bins of width 0.5 nats over [-20, 20]; the last bin is closed.
    pub fn delta_entropy(values: &[f64]) -> Self {
        let n_bins = ((HISTOGRAM_MAX - HISTOGRAM_MIN) / HISTOGRAM_BIN).round() as usize;
        let edges = (0..=n_bins)
            .map(|i| HISTOGRAM_MIN + i as f64 * HISTOGRAM_BIN)
            .collect();
        let mut h = Histogram {
            edges,
            counts: vec![0; n_bins],
            below: 0,
            above: 0,
        };
        for &v in values {
            if v < HISTOGRAM_MIN {
                h.below += 1;
            } else if v > HISTOGRAM_MAX {
                h.above += 1;
            } else {
                let bin = (((v - HISTOGRAM_MIN) / HISTOGRAM_BIN).floor() as usize).min(n_bins - 1);
                h.counts[bin] += 1;
            }
        }
        h
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.below + self.above
    }
}

/// Entropy, diversity and efficiency of one descriptor set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetSummary {
    pub n_env: usize,
    pub entropy: f64,
    pub diversity: f64,
    /// `log N`, the largest possible entropy.
    pub max_entropy: f64,
    /// `H / log N`; undefined below two environments.
    pub efficiency: Option<f64>,
}

impl SetSummary {
    pub fn compute(descs: &DescriptorSet, kernel: KernelParams) -> Result<Self> {
        let result = entropy(descs.rows(), kernel)?;
        let n = descs.n_environments();
        let max_entropy = (n as f64).ln();
        Ok(SetSummary {
            n_env: n,
            entropy: result.entropy_nats,
            diversity: result.diversity().expect("entropy keeps per-point values"),
            max_entropy,
            efficiency: (n >= 2).then(|| result.entropy_nats / max_entropy),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressionReport {
    pub n_structures_full: usize,
    pub n_structures_compressed: usize,
    pub full: SetSummary,
    pub compressed: SetSummary,
    /// Fraction of full-dataset environments with δH ≤ 0 against the
    /// compressed set. This is the informative direction.
    pub overlap_full_given_compressed: f64,
    /// Fraction of compressed environments covered by the full set; 1 for
    /// any subset.
    pub overlap_compressed_given_full: f64,
    /// Full environments with δH > 0.
    pub n_uncovered: usize,
    /// Full environments with δH > 10 nats.
    pub n_far: usize,
    pub histogram: Histogram,
    /// δH of every full-dataset environment against the compressed set.
    pub delta_entropy: Vec<f64>,
}

impl CompressionReport {
    pub fn to_block(&self, name: &str, parameters: Parameters) -> MetricBlock {
        let mut b = MetricBlock::new(name, parameters);
        b.push("n_structures_full", self.n_structures_full)
            .push("n_structures_compressed", self.n_structures_compressed)
            .push("n_env_full", self.full.n_env)
            .push("n_env_compressed", self.compressed.n_env)
            .push("entropy_nats", self.compressed.entropy)
            .push("diversity_nats", self.compressed.diversity)
            .push("max_entropy_nats", self.compressed.max_entropy)
            .push("efficiency", self.compressed.efficiency)
            .push("entropy_full_nats", self.full.entropy)
            .push("diversity_full_nats", self.full.diversity)
            .push("max_entropy_full_nats", self.full.max_entropy)
            .push("efficiency_full", self.full.efficiency)
            .push(
                "overlap_full_given_compressed",
                self.overlap_full_given_compressed,
            )
            .push(
                "overlap_compressed_given_full",
                self.overlap_compressed_given_full,
            )
            .push("n_delta_entropy_positive", self.n_uncovered)
            .push("n_delta_entropy_above_10", self.n_far)
            .push("delta_entropy_bin_edges", self.histogram.edges.clone())
            .push("delta_entropy_counts", self.histogram.counts.clone())
            .push("delta_entropy_below_range", self.histogram.below as usize)
            .push("delta_entropy_above_range", self.histogram.above as usize);
        b
    }
}

/// Compare the structures at `selection` against the full descriptor set.
pub fn compression_report(
    full: &DescriptorSet,
    selection: &[usize],
    kernel: KernelParams,
) -> Result<CompressionReport> {
    let summary = SetSummary::compute(full, kernel)?;
    compression_report_with(full, &summary, selection, kernel)
}

/// As [`compression_report`], reusing a precomputed full-set summary.
///
/// Metrics are set functions, so they are computed on the selection in
/// ascending index order.
pub fn compression_report_with(
    full: &DescriptorSet,
    full_summary: &SetSummary,
    selection: &[usize],
    kernel: KernelParams,
) -> Result<CompressionReport> {
    if selection.is_empty() {
        return Err(Error::input("empty selection"));
    }
    check_selection(selection, full.n_structures())?;
    let mut sorted = selection.to_vec();
    sorted.sort_unstable();
    let compressed = full.subset(&sorted)?;
    let compressed_summary = SetSummary::compute(&compressed, kernel)?;
    let dh = delta_entropy(full.rows(), compressed.rows(), kernel)?;
    let reverse = delta_entropy(compressed.rows(), full.rows(), kernel)?;
    Ok(CompressionReport {
        n_structures_full: full.n_structures(),
        n_structures_compressed: selection.len(),
        full: *full_summary,
        compressed: compressed_summary,
        overlap_full_given_compressed: contained_fraction(&dh),
        overlap_compressed_given_full: contained_fraction(&reverse),
        n_uncovered: dh.iter().filter(|&&v| v > 0.0).count(),
        n_far: dh.iter().filter(|&&v| v > FAR_THRESHOLD).count(),
        histogram: Histogram::delta_entropy(&dh),
        delta_entropy: dh,
    })
}

/// One (method, fraction) cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub method: Method,
    pub fraction: f64,
    pub k: usize,
    pub n_env: usize,
    pub entropy: f64,
    pub diversity: f64,
    pub overlap: f64,
    pub efficiency: Option<f64>,
    pub selected: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub full: SetSummary,
    /// Sorted by method, then fraction.
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn row(&self, method: Method, fraction: f64) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.fraction == fraction)
    }

    pub fn to_blocks(&self, base: &Parameters) -> Vec<MetricBlock> {
        self.rows
            .iter()
            .map(|r| {
                let mut p = base.clone();
                p.method = Some(r.method.to_string());
                p.fraction = Some(r.fraction);
                p.count = Some(r.k);
                let mut b = MetricBlock::new("sweep", p);
                b.push("n_structures", r.k)
                    .push("n_env", r.n_env)
                    .push("entropy_nats", r.entropy)
                    .push("diversity_nats", r.diversity)
                    .push("overlap_full_given_compressed", r.overlap)
                    .push("efficiency", r.efficiency);
                b
            })
            .collect()
    }
}

/// Run every method at every fraction and summarize each compressed set.
pub fn compare_methods(
    descs: &DescriptorSet,
    fractions: &[f64],
    methods: &[Method],
    seed: u64,
    kernel: KernelParams,
) -> Result<SweepResult> {
    if fractions.is_empty() || methods.is_empty() {
        return Err(Error::input(
            "a sweep needs at least one method and one fraction",
        ));
    }
    let mut fractions = fractions.to_vec();
    fractions.sort_by(f64::total_cmp);
    fractions.dedup();
    let mut methods = methods.to_vec();
    methods.sort();
    methods.dedup();
    for &f in &fractions {
        Target::Fraction(f).resolve(descs.n_structures())?;
    }
    let full = SetSummary::compute(descs, kernel)?;
    let cells: Vec<(Method, f64)> = methods
        .iter()
        .flat_map(|&m| fractions.iter().map(move |&f| (m, f)))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(method, fraction)| {
            let config = SamplerConfig {
                method,
                target: Target::Fraction(fraction),
                seed,
                kernel,
                descriptor: descs.params(),
            };
            let result = run_sampler(&config, descs)?;
            let report = compression_report_with(descs, &full, &result.selected, kernel)?;
            Ok(SweepRow {
                method,
                fraction,
                k: result.selected.len(),
                n_env: report.compressed.n_env,
                entropy: report.compressed.entropy,
                diversity: report.compressed.diversity,
                overlap: report.overlap_full_given_compressed,
                efficiency: report.compressed.efficiency,
                selected: result.selected,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { full, rows })
}
