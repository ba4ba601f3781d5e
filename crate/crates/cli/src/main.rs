mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use envcover::descriptor::{DEFAULT_CUTOFF, DEFAULT_K};
use envcover::info::DEFAULT_BANDWIDTH;
use envcover::io::ReportFormat;
use envcover::samplers::Method;
use envcover::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_USAGE: u8 = 3;
const EXIT_GEOMETRY: u8 = 4;

/// Compress atomistic datasets by greedy set cover over atom-centered
/// descriptors and report entropy-based figures of merit.
#[derive(Debug, Parser)]
#[command(name = "envcover", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Select a subset of structures and write it as extxyz.
    Compress(CompressArgs),
    /// Entropy, diversity and efficiency of a dataset.
    Analyze(AnalyzeArgs),
    /// Fraction of query environments already covered by a reference set.
    Overlap(OverlapArgs),
    /// Cumulative distribution of per-atom force magnitudes.
    ForceCdf(ForceCdfArgs),
    /// Run several samplers at several fractions.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Nearest neighbors per environment.
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    /// Descriptor cutoff radius in Å.
    #[arg(long, default_value_t = DEFAULT_CUTOFF)]
    cutoff: f64,
    /// Kernel bandwidth in descriptor units.
    #[arg(long, default_value_t = DEFAULT_BANDWIDTH)]
    bandwidth: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report format: json or csv.
    #[arg(long, default_value = "json")]
    format: ReportFormat,
    /// Directory for cached descriptors.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Report path; printed to stdout when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(id = "size", required = true, multiple = false)]
struct Size {
    /// Fraction of structures to keep, in (0, 1].
    #[arg(long, group = "size")]
    fraction: Option<f64>,
    /// Number of structures to keep.
    #[arg(long, group = "size")]
    count: Option<usize>,
}

#[derive(Debug, Args)]
struct CompressArgs {
    input: PathBuf,
    /// Compressed extxyz output.
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value = "msc")]
    method: Method,
    #[command(flatten)]
    size: Size,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    input: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct OverlapArgs {
    query: PathBuf,
    reference: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct ForceCdfArgs {
    /// Full dataset; also fixes the default threshold grid.
    input: PathBuf,
    /// Compressed dataset to compare against the full one.
    compressed: Option<PathBuf>,
    /// Comma-separated thresholds in eV/Å.
    #[arg(long, value_delimiter = ',')]
    thresholds: Option<Vec<f64>>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct CompareArgs {
    input: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.25,0.5,0.75")]
    fractions: Vec<f64>,
    /// Comma-separated methods, or `all`.
    #[arg(long, value_delimiter = ',', default_value = "all")]
    methods: Vec<String>,
    #[command(flatten)]
    common: Common,
}

fn exit_code(error: &Error) -> u8 {
    match error {
        Error::Parse { .. } => EXIT_PARSE,
        Error::Input(_) => EXIT_USAGE,
        Error::DegenerateGeometry { .. } | Error::Cell(_) => EXIT_GEOMETRY,
        _ => EXIT_FAILURE,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
