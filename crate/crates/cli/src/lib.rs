//! Command-line front end: argument definitions and command drivers.

pub mod analyze;
pub mod config;
pub mod error;
pub mod input;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use illiqcorr::bootstrap::{MultiplierDist, ReplicateScaling};
use illiqcorr::harness::{emit_tables, run_experiment};
use illiqcorr::kernel::KernelConfig;
use illiqcorr::powercorr::Method;
use illiqcorr::simulate::{generate, DgpConfig, MedianKind, LITERAL_THINNING_THRESHOLD};

use crate::analyze::{analyze, profiles_for, report_json, write_analysis, write_profiles_csv, AnalyzeOptions};
use crate::config::ExperimentFile;
use crate::error::{CliError, CliResult};
use crate::input::{read_input, InputData, InputKind};

#[derive(Debug, Parser)]
#[command(name = "illiqcorr", version, about = "Power autocorrelations of illiquid returns")]
pub struct Cli {
    /// Worker threads (default: available cores).
    #[arg(long, global = true, env = "ILLIQCORR_THREADS")]
    pub threads: Option<usize>,
    /// Also print the main result on stdout.
    #[arg(long, global = true)]
    pub stdout: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Autocorrelograms, bands and portmanteau tests for one series.
    Analyze(AnalyzeArgs),
    /// Simulate a panel from one of the named designs.
    Simulate(SimulateArgs),
    /// Run a Monte Carlo experiment described by a TOML file.
    Experiment(ExperimentArgs),
    /// Probability and absolute-return profiles of one series.
    Profile(ProfileArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// CSV with a `price` column; log-returns are taken.
    #[arg(long, value_name = "FILE")]
    pub prices: Option<PathBuf>,
    /// CSV with a `return` (or `returns`, `observed`) column.
    #[arg(long, value_name = "FILE")]
    pub returns: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[command(flatten)]
    pub source: Source,
    /// Column to read instead of the default name.
    #[arg(long)]
    pub column: Option<String>,
}

impl InputArgs {
    fn load(&self) -> CliResult<InputData> {
        match (&self.source.prices, &self.source.returns) {
            (Some(p), None) => read_input(p, InputKind::Prices, self.column.as_deref()),
            (None, Some(r)) => read_input(r, InputKind::Returns, self.column.as_deref()),
            _ => Err(CliError::usage("exactly one of --prices / --returns is required")),
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 5)]
    pub max_lag: usize,
    /// Portmanteau lags (default: max-lag).
    #[arg(long)]
    pub test_lags: Option<usize>,
    /// Methods to run; repeat or comma-separate (default: all).
    #[arg(long, value_delimiter = ',')]
    pub method: Vec<Method>,
    /// Bootstrap replicates.
    #[arg(long = "B", default_value_t = 999)]
    pub replicates: usize,
    #[arg(long, default_value = "mammen")]
    pub multiplier: MultiplierDist,
    /// Denominator of the bootstrap autocorrelations.
    #[arg(long, value_enum, default_value = "observed")]
    pub scaling: ScalingArg,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Absolute returns at or below this value count as zero.
    #[arg(long, default_value_t = 0.0)]
    pub zero_threshold: f64,
    /// Fixed bandwidth instead of LOOCV selection.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Use literal (unnormalized) kernel weights.
    #[arg(long)]
    pub unnormalized: bool,
    #[arg(long, default_value = "illiqcorr-analyze")]
    pub out: PathBuf,
}

impl AnalyzeArgs {
    pub fn options(&self) -> AnalyzeOptions {
        let mut kernel = match self.bandwidth {
            Some(b) => KernelConfig::with_bandwidth(b),
            None => KernelConfig::default(),
        };
        kernel.normalize_weights = !self.unnormalized;
        AnalyzeOptions {
            delta: self.delta,
            max_lag: self.max_lag,
            test_lags: self.test_lags.unwrap_or(self.max_lag),
            methods: if self.method.is_empty() { Method::ALL.to_vec() } else { self.method.clone() },
            replicates: self.replicates,
            multiplier: self.multiplier,
            scaling: match self.scaling {
                ScalingArg::Observed => ReplicateScaling::ObservedGamma0,
                ScalingArg::Replicate => ReplicateScaling::ReplicateGamma0,
            },
            alpha: self.alpha,
            seed: self.seed,
            zero_threshold: self.zero_threshold,
            kernel,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Design: a1, a2, c1, c2 or b.
    #[arg(long)]
    pub dgp: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Thinning cut-off on |eta| (default keeps 90% of returns).
    #[arg(long, conflicts_with = "literal_threshold")]
    pub thinning_threshold: Option<f64>,
    /// Use the printed cut-off 0.063 for thinning.
    #[arg(long)]
    pub literal_threshold: bool,
    /// Median used for censoring in the GARCH design.
    #[arg(long, value_enum, default_value = "sample")]
    pub median: MedianArg,
    #[arg(long, default_value = "illiqcorr-simulate")]
    pub out: PathBuf,
}

/// `observed` divides by the sample lag-0 autocovariance, `replicate` by
/// each replicate's own.
#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum ScalingArg {
    Observed,
    Replicate,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum MedianArg {
    Sample,
    Population,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long, value_name = "FILE")]
    pub config: PathBuf,
    /// R = 5000 and B = 3999 unless the file sets them.
    #[arg(long)]
    pub paper_scale: bool,
    #[arg(long, default_value = "illiqcorr-experiment")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 0.0)]
    pub zero_threshold: f64,
    #[arg(long, default_value = "illiqcorr-profile")]
    pub out: PathBuf,
}

fn emit(stdout: bool, text: &str) -> CliResult<()> {
    if stdout {
        let mut out = std::io::stdout().lock();
        out.write_all(text.as_bytes())?;
        out.flush()?;
    }
    Ok(())
}

fn cmd_analyze(args: &AnalyzeArgs, stdout: bool) -> CliResult<()> {
    let input = args.input.load()?;
    let analysis = analyze(&input, &args.options())?;
    write_analysis(&analysis, &args.out)?;
    log::info!("analysis written to {}", args.out.display());
    emit(stdout, &report_json(&analysis.report)?)
}

pub fn simulate_config(args: &SimulateArgs) -> CliResult<DgpConfig> {
    let mut cfg = DgpConfig::preset(&args.dgp, args.n, args.seed)?;
    if args.literal_threshold {
        cfg.thinning_threshold = LITERAL_THINNING_THRESHOLD;
    } else if let Some(c) = args.thinning_threshold {
        cfg.thinning_threshold = c;
    }
    cfg.median = match args.median {
        MedianArg::Sample => MedianKind::Sample,
        MedianArg::Population => MedianKind::Population,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_simulate(args: &SimulateArgs, stdout: bool) -> CliResult<()> {
    let panel = generate(&simulate_config(args)?)?;
    let mut buf = Vec::new();
    panel.write_csv(&mut buf)?;
    std::fs::create_dir_all(&args.out)?;
    std::fs::write(args.out.join("panel.csv"), &buf)?;
    emit(stdout, &String::from_utf8_lossy(&buf))
}

fn cmd_experiment(args: &ExperimentArgs, stdout: bool) -> CliResult<()> {
    let mut file = ExperimentFile::load(&args.config)?;
    file.paper_scale |= args.paper_scale;
    let spec = file.into_spec()?;
    let result = run_experiment(&spec)?;
    for (n, secs) in &result.seconds {
        log::info!("n = {n}: {secs:.2}s");
    }
    let tables = emit_tables(&result);
    let dir: &Path = &args.out;
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("rejections.csv"), &tables.rejection_csv)?;
    std::fs::write(dir.join("rejections.txt"), &tables.rejection_text)?;
    std::fs::write(dir.join("bands.csv"), &tables.bands_csv)?;
    std::fs::write(dir.join("bands.txt"), &tables.bands_text)?;
    emit(stdout, &format!("{}\n{}", tables.rejection_text, tables.bands_text))
}

fn cmd_profile(args: &ProfileArgs, stdout: bool) -> CliResult<()> {
    let input = args.input.load()?;
    let series = illiqcorr::build_series(&input.returns, args.zero_threshold)?;
    let profiles = profiles_for(&series)?;
    let mut buf = Vec::new();
    write_profiles_csv(&profiles, &series, input.dates.as_deref(), &mut buf)?;
    std::fs::create_dir_all(&args.out)?;
    std::fs::write(args.out.join("profiles.csv"), &buf)?;
    emit(stdout, &String::from_utf8_lossy(&buf))
}

fn install_threads(threads: Option<usize>) -> CliResult<()> {
    let n = match threads {
        Some(0) => return Err(CliError::usage("--threads must be >= 1")),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::usage(format!("thread pool: {e}")))
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> CliResult<()> {
    install_threads(cli.threads)?;
    match &cli.command {
        Command::Analyze(a) => cmd_analyze(a, cli.stdout),
        Command::Simulate(a) => cmd_simulate(a, cli.stdout),
        Command::Experiment(a) => cmd_experiment(a, cli.stdout),
        Command::Profile(a) => cmd_profile(a, cli.stdout),
    }
}
