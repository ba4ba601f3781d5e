//! Greedy minimum set cover over atomic environments.
//!
//! The first pick is the structure with the highest entropy of its own
//! environments. Every later pick maximizes
//!
//! ```text
//! max_j δH(X_j | selected environments) + H(S)
//! ```
//!
//! over the remaining structures `S`, ties going to the lowest index. The
//! kernel sum of every candidate environment against the selected set is
//! kept in log space and extended with each newly selected structure only.

use rayon::prelude::*;

use super::{check_target, CompressionResult, Method};
use crate::descriptor::DescriptorSet;
use crate::error::Result;
use crate::info::{per_structure_entropy, squared_distance, KernelParams, LogSumExp};

/// Scores of one greedy step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MscStep {
    pub structure: usize,
    pub score: f64,
    /// Largest δH over the structure's environments; `None` for the first pick.
    pub max_delta_entropy: Option<f64>,
    pub structure_entropy: f64,
}

/// Incremental state of the greedy set-cover selection.
pub struct MscSelector<'a> {
    descs: &'a DescriptorSet,
    kernel: KernelParams,
    structure_entropy: Vec<f64>,
    /// Log kernel sum of each environment against all selected environments.
    log_sums: Vec<f64>,
    /// Structure of each environment.
    owner: Vec<usize>,
    is_selected: Vec<bool>,
    selected: Vec<usize>,
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

impl<'a> MscSelector<'a> {
    pub fn new(descs: &'a DescriptorSet, kernel: KernelParams) -> Result<Self> {
        let structure_entropy = per_structure_entropy(descs, kernel)?;
        let mut owner = Vec::with_capacity(descs.n_environments());
        for (s, &(_, len)) in descs.offsets().iter().enumerate() {
            owner.extend(std::iter::repeat_n(s, len));
        }
        Ok(MscSelector {
            descs,
            kernel,
            structure_entropy,
            log_sums: vec![f64::NEG_INFINITY; descs.n_environments()],
            owner,
            is_selected: vec![false; descs.n_structures()],
            selected: Vec::new(),
        })
    }

    pub fn structure_entropy(&self) -> &[f64] {
        &self.structure_entropy
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    /// δH of every environment against the selected environments.
    ///
    /// Entries of environments in already-selected structures are frozen at
    /// the step their structure was selected. Before the first pick every
    /// entry is `+∞`.
    pub fn delta_entropies(&self) -> Vec<f64> {
        self.log_sums.iter().map(|&v| -v).collect()
    }

    fn max_delta_entropy(&self, structure: usize) -> f64 {
        let (start, len) = self.descs.offsets()[structure];
        self.log_sums[start..start + len]
            .iter()
            .map(|&v| -v)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Select one more structure; `None` once every structure is selected.
    pub fn select_next(&mut self) -> Option<MscStep> {
        let n = self.descs.n_structures();
        let mut best: Option<MscStep> = None;
        for s in (0..n).filter(|&s| !self.is_selected[s]) {
            let entropy = self.structure_entropy[s];
            let (score, max_dh) = if self.selected.is_empty() {
                (entropy, None)
            } else {
                let m = self.max_delta_entropy(s);
                (m + entropy, Some(m))
            };
            if best.is_none_or(|b| score > b.score) {
                best = Some(MscStep {
                    structure: s,
                    score,
                    max_delta_entropy: max_dh,
                    structure_entropy: entropy,
                });
            }
        }
        let step = best?;
        self.is_selected[step.structure] = true;
        self.selected.push(step.structure);
        self.absorb(step.structure);
        Some(step)
    }

    /// Add the kernel contributions of `structure` to every unselected
    /// environment.
    fn absorb(&mut self, structure: usize) {
        let refs = self.descs.structure_rows(structure);
        let rows = self.descs.rows();
        let scale = self.kernel.log_kernel_scale();
        let owner = &self.owner;
        let is_selected = &self.is_selected;
        self.log_sums
            .par_iter_mut()
            .enumerate()
            .filter(|(env, _)| !is_selected[owner[*env]])
            .for_each(|(env, log_sum)| {
                let query = rows.row(env);
                let mut acc = LogSumExp::new();
                for r in refs.iter() {
                    acc.push(scale * squared_distance(query, r));
                }
                *log_sum = log_add_exp(*log_sum, acc.value());
            });
    }
}

/// Greedy set-cover compression to `k` structures.
pub fn sample_msc(
    descs: &DescriptorSet,
    k: usize,
    kernel: KernelParams,
) -> Result<CompressionResult> {
    check_target(k, descs.n_structures())?;
    let mut selector = MscSelector::new(descs, kernel)?;
    let mut steps = Vec::with_capacity(k);
    while steps.len() < k {
        steps.push(selector.select_next().expect("k <= number of structures"));
    }
    Ok(CompressionResult {
        method: Method::Msc,
        selected: steps.iter().map(|s| s.structure).collect(),
        steps: Some(steps),
    })
}
