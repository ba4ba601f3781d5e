//! Structure-level subsampling: random, k-means, mean farthest-point and
//! greedy minimum set cover.

mod fps;
mod kmeans;
mod msc;
mod random;

use std::fmt;
use std::str::FromStr;

use crate::descriptor::{DescriptorParams, DescriptorSet};
use crate::error::{Error, Result};
use crate::info::KernelParams;

pub use fps::{sample_fps, sample_fps_from};
pub use kmeans::{kmeans, sample_kmeans, KMeansFit, KMEANS_MAX_ITER, KMEANS_TOL};
pub use msc::{sample_msc, MscSelector, MscStep};
pub use random::sample_random;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Random,
    KMeans,
    Fps,
    Msc,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Random, Method::KMeans, Method::Fps, Method::Msc];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Random => "random",
            Method::KMeans => "kmeans",
            Method::Fps => "fps",
            Method::Msc => "msc",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(Method::Random),
            "kmeans" | "k-means" => Ok(Method::KMeans),
            "fps" | "mean-fps" => Ok(Method::Fps),
            "msc" => Ok(Method::Msc),
            other => Err(Error::input(format!("unknown sampling method '{other}'"))),
        }
    }
}

/// Requested compressed size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Count(usize),
    /// Fraction of the structure count, in (0, 1].
    Fraction(f64),
}

impl Target {
    /// Number of structures to select out of `n`. Fractions round half away
    /// from zero, with a floor of one.
    pub fn resolve(&self, n: usize) -> Result<usize> {
        let k = match *self {
            Target::Count(k) => k,
            Target::Fraction(f) => {
                if !(f > 0.0 && f <= 1.0) {
                    return Err(Error::input(format!("fraction must be in (0, 1], got {f}")));
                }
                ((f * n as f64).round() as usize).max(1)
            }
        };
        check_target(k, n)?;
        Ok(k)
    }
}

pub(crate) fn check_target(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::input(format!(
            "target size {k} must be between 1 and the number of structures ({n})"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub method: Method,
    pub target: Target,
    pub seed: u64,
    pub kernel: KernelParams,
    pub descriptor: DescriptorParams,
}

/// Selected structure indices, in selection order.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressionResult {
    pub method: Method,
    pub selected: Vec<usize>,
    /// Per-step scores, recorded by the set-cover sampler only.
    pub steps: Option<Vec<MscStep>>,
}

/// Mean descriptor of each structure, flattened row-major with the
/// descriptor width.
pub fn structure_means(descs: &DescriptorSet) -> Vec<f64> {
    let width = descs.width();
    let mut out = vec![0.0; descs.n_structures() * width];
    for (s, mean) in out.chunks_exact_mut(width).enumerate() {
        let rows = descs.structure_rows(s);
        for row in rows.iter() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        let n = rows.len() as f64;
        for m in mean.iter_mut() {
            *m /= n;
        }
    }
    out
}

/// Run the configured sampler.
pub fn run_sampler(config: &SamplerConfig, descs: &DescriptorSet) -> Result<CompressionResult> {
    let k = config.target.resolve(descs.n_structures())?;
    match config.method {
        Method::Random => sample_random(descs.n_structures(), k, config.seed),
        Method::KMeans => sample_kmeans(descs, k, config.seed),
        Method::Fps => sample_fps(descs, k, config.seed),
        Method::Msc => sample_msc(descs, k, config.kernel),
    }
}
