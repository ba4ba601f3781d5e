use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use envcover::descriptor::{
    build_descriptor_set, read_cache, write_cache, DescriptorParams, DescriptorSet,
};
use envcover::evaluation::{
    compare_methods, compression_report, default_thresholds, force_cdf, Histogram, SetSummary,
    FAR_THRESHOLD,
};
use envcover::geometry::Dataset;
use envcover::info::{delta_entropy, per_structure_entropy, KernelParams};
use envcover::io::{
    read_extxyz, write_extxyz_file, write_report, MetricBlock, Parameters, ReportDocument,
};
use envcover::samplers::{run_sampler, Method, SamplerConfig, Target};
use envcover::{Error, Result};
use sha2::{Digest, Sha256};

use crate::{AnalyzeArgs, Command, Common, CompareArgs, CompressArgs, ForceCdfArgs, OverlapArgs};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Compress(args) => compress(args),
        Command::Analyze(args) => analyze(args),
        Command::Overlap(args) => overlap(args),
        Command::ForceCdf(args) => force_cdf_table(args),
        Command::Compare(args) => compare(args),
    }
}

/// Validated settings shared by every command.
struct Settings {
    descriptor: DescriptorParams,
    kernel: KernelParams,
    common: Common,
}

impl Settings {
    fn new(common: Common) -> Result<Self> {
        let descriptor = DescriptorParams::new(common.k, common.cutoff)?;
        let kernel = KernelParams::new(common.bandwidth)?;
        if let Some(threads) = common.threads {
            if threads == 0 {
                return Err(Error::Input("--threads must be positive".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
                .map_err(|e| Error::Input(e.to_string()))?;
        }
        Ok(Settings {
            descriptor,
            kernel,
            common,
        })
    }

    fn parameters(&self) -> Parameters {
        Parameters {
            k: self.descriptor.k,
            cutoff: self.descriptor.cutoff,
            bandwidth: self.kernel.bandwidth,
            seed: self.common.seed,
            method: None,
            fraction: None,
            count: None,
        }
    }

    fn emit(&self, report: &ReportDocument) -> Result<()> {
        match &self.common.report {
            Some(path) => write_report(report, self.common.format, path),
            None => {
                let text = report.render(self.common.format)?;
                std::io::stdout().write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }

    /// Descriptors of `input`, read from or stored in the cache directory
    /// when one is configured.
    fn descriptors(&self, input: &Input) -> Result<DescriptorSet> {
        let Some(dir) = &self.common.cache else {
            return build_descriptor_set(&input.dataset, &self.descriptor);
        };
        let path = cache_path(dir, &input.digest, &self.descriptor);
        if path.exists() {
            let cached = read_cache(&path)?;
            if cached.params() == self.descriptor && cached.n_structures() == input.dataset.len() {
                return Ok(cached);
            }
        }
        let set = build_descriptor_set(&input.dataset, &self.descriptor)?;
        fs::create_dir_all(dir)?;
        write_cache(&set, &path)?;
        Ok(set)
    }
}

fn cache_path(dir: &Path, digest: &str, params: &DescriptorParams) -> PathBuf {
    let cutoff_bits = params.cutoff.to_bits();
    dir.join(format!("{digest}-k{}-rc{cutoff_bits:016x}.desc", params.k))
}

struct Input {
    dataset: Dataset,
    digest: String,
}

fn load(path: &Path) -> Result<Input> {
    let bytes = fs::read(path)?;
    let digest = hex::encode(Sha256::digest(&bytes));
    let name = path.file_stem().map_or_else(
        || "dataset".to_string(),
        |s| s.to_string_lossy().into_owned(),
    );
    let dataset = read_extxyz(bytes.as_slice(), &name)?;
    if dataset.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: format!("{} contains no frames", path.display()),
        });
    }
    Ok(Input { dataset, digest })
}

fn compress(args: CompressArgs) -> Result<()> {
    let settings = Settings::new(args.common)?;
    let input = load(&args.input)?;
    let descs = settings.descriptors(&input)?;
    let target = match (args.size.fraction, args.size.count) {
        (Some(f), None) => Target::Fraction(f),
        (None, Some(c)) => Target::Count(c),
        _ => unreachable!("clap enforces exactly one of --fraction and --count"),
    };
    let config = SamplerConfig {
        method: args.method,
        target,
        seed: settings.common.seed,
        kernel: settings.kernel,
        descriptor: settings.descriptor,
    };
    let result = run_sampler(&config, &descs)?;
    let report = compression_report(&descs, &result.selected, settings.kernel)?;

    let mut params = settings.parameters();
    params.method = Some(args.method.to_string());
    params.fraction = args.size.fraction;
    params.count = Some(result.selected.len());
    let mut block = report.to_block("compression", params.clone());
    block.push(
        "selected",
        result
            .selected
            .iter()
            .map(|&i| i as u64)
            .collect::<Vec<_>>(),
    );
    if let Some(steps) = &result.steps {
        block.push(
            "step_scores",
            steps.iter().map(|s| s.score).collect::<Vec<_>>(),
        );
    }
    let mut doc = ReportDocument::new(input.digest, params);
    doc.blocks.push(block);

    write_extxyz_file(&input.dataset, &result.selected, &args.output)?;
    settings.emit(&doc)
}

fn analyze(args: AnalyzeArgs) -> Result<()> {
    let settings = Settings::new(args.common)?;
    let input = load(&args.input)?;
    let descs = settings.descriptors(&input)?;
    let summary = SetSummary::compute(&descs, settings.kernel)?;
    let per_structure = per_structure_entropy(&descs, settings.kernel)?;

    let params = settings.parameters();
    let mut block = MetricBlock::new("dataset", params.clone());
    block
        .push("n_structures", descs.n_structures())
        .push("n_env", summary.n_env)
        .push("entropy_nats", summary.entropy)
        .push("diversity_nats", summary.diversity)
        .push("max_entropy_nats", summary.max_entropy)
        .push("efficiency", summary.efficiency)
        .push("structure_entropy_nats", per_structure);
    let mut doc = ReportDocument::new(input.digest, params);
    doc.blocks.push(block);
    settings.emit(&doc)
}

fn overlap(args: OverlapArgs) -> Result<()> {
    let settings = Settings::new(args.common)?;
    let query = load(&args.query)?;
    let reference = load(&args.reference)?;
    let query_descs = settings.descriptors(&query)?;
    let reference_descs = settings.descriptors(&reference)?;
    let dh = delta_entropy(query_descs.rows(), reference_descs.rows(), settings.kernel)?;
    let covered = dh.iter().filter(|&&v| v <= 0.0).count();
    let histogram = Histogram::delta_entropy(&dh);

    let params = settings.parameters();
    let mut block = MetricBlock::new("overlap", params.clone());
    block
        .push("n_env_query", dh.len())
        .push("n_env_reference", reference_descs.n_environments())
        .push(
            "overlap_query_given_reference",
            covered as f64 / dh.len() as f64,
        )
        .push("n_delta_entropy_positive", dh.len() - covered)
        .push(
            "n_delta_entropy_above_10",
            dh.iter().filter(|&&v| v > FAR_THRESHOLD).count(),
        )
        .push("delta_entropy_bin_edges", histogram.edges)
        .push("delta_entropy_counts", histogram.counts)
        .push("delta_entropy_below_range", histogram.below as usize)
        .push("delta_entropy_above_range", histogram.above as usize);
    let digest = format!("{},{}", query.digest, reference.digest);
    let mut doc = ReportDocument::new(digest, params);
    doc.blocks.push(block);
    settings.emit(&doc)
}

fn force_cdf_table(args: ForceCdfArgs) -> Result<()> {
    let settings = Settings::new(args.common)?;
    let full = load(&args.input)?;
    let thresholds = match args.thresholds {
        Some(t) => t,
        None => default_thresholds(&full.dataset)?,
    };
    let mut inputs = vec![("full", full)];
    if let Some(path) = &args.compressed {
        inputs.push(("compressed", load(path)?));
    }

    let params = settings.parameters();
    let mut blocks = Vec::new();
    for (name, input) in &inputs {
        let all: Vec<usize> = (0..input.dataset.len()).collect();
        let cdf = force_cdf(&input.dataset, &all, &thresholds)?;
        let mut block = MetricBlock::new(*name, params.clone());
        block
            .push("n_structures", input.dataset.len())
            .push("n_atoms", cdf.n_atoms)
            .push("max_force", cdf.max_force)
            .push(
                "cdf_at_max_threshold",
                *cdf.cdf.last().expect("thresholds are non-empty"),
            )
            .push("thresholds", cdf.thresholds)
            .push("cdf", cdf.cdf);
        blocks.push(block);
    }
    let digest = inputs
        .iter()
        .map(|(_, input)| input.digest.as_str())
        .collect::<Vec<_>>()
        .join(",");
    let mut doc = ReportDocument::new(digest, params);
    doc.blocks = blocks;
    settings.emit(&doc)
}

fn parse_methods(names: &[String]) -> Result<Vec<Method>> {
    if names.iter().any(|n| n.eq_ignore_ascii_case("all")) {
        return Ok(Method::ALL.to_vec());
    }
    names.iter().map(|n| n.parse()).collect()
}

fn compare(args: CompareArgs) -> Result<()> {
    let settings = Settings::new(args.common)?;
    let methods = parse_methods(&args.methods)?;
    let input = load(&args.input)?;
    let descs = settings.descriptors(&input)?;
    let sweep = compare_methods(
        &descs,
        &args.fractions,
        &methods,
        settings.common.seed,
        settings.kernel,
    )?;

    let params = settings.parameters();
    let mut full = MetricBlock::new("full", params.clone());
    full.push("n_structures", descs.n_structures())
        .push("n_env", sweep.full.n_env)
        .push("entropy_nats", sweep.full.entropy)
        .push("diversity_nats", sweep.full.diversity)
        .push("efficiency", sweep.full.efficiency);
    let mut doc = ReportDocument::new(input.digest, params.clone());
    doc.blocks.push(full);
    doc.blocks.extend(sweep.to_blocks(&params));
    settings.emit(&doc)
}
