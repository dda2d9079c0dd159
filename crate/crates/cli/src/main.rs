//! `igk` command-line frontend.
//!
//! Exit codes: 0 success, 1 bad arguments, 2 I/O or parse failure, 3
//! numerical failure.

mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "igk", version, about = "Incomplete gamma kernel point cloud and mesh tools")]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Treat window sizes and noise levels as model units instead of
    /// percent of the bounding box diagonal.
    #[arg(long, global = true)]
    pub absolute_units: bool,

    /// Upper bound on worker threads. All pipelines currently run on one.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,

    /// Repeat for more log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Project points onto the input cloud with (weighted) LOP.
    DenoisePoints(DenoisePointsArgs),
    /// Run mean shift from seed points.
    MeanShift(MeanShiftArgs),
    /// Fit or export a Gaussian mixture approximation of the LOP kernel.
    FitKernel(FitKernelArgs),
    /// Two-stage mesh denoising with a robust normal filter.
    DenoiseMesh(DenoiseMeshArgs),
    /// Add synthetic noise to points or mesh vertices.
    Corrupt(CorruptArgs),
    /// Compute a quality metric.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WeightingArg {
    None,
    Wlop,
    Simple,
    Full,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EtaArg {
    Lop,
    Wlop,
}

#[derive(Debug, Args)]
pub struct DenoisePointsArgs {
    /// Target points.
    pub input: std::path::PathBuf,
    /// Projected points.
    pub output: std::path::PathBuf,
    /// Window size.
    #[arg(long, default_value_t = 6.0)]
    pub h: f64,
    /// Repulsion weight in [0, 0.5).
    #[arg(long, default_value_t = 0.4)]
    pub mu: f64,
    #[arg(long, default_value_t = 30)]
    pub iters: usize,
    /// Shape of the attraction kernel.
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// Scale of the attraction kernel relative to h.
    #[arg(long, default_value_t = 1.0 / 32.0)]
    pub sigma2: f64,
    #[arg(long, value_enum, default_value_t = WeightingArg::None)]
    pub weighting: WeightingArg,
    #[arg(long, value_enum, default_value_t = EtaArg::Wlop)]
    pub eta: EtaArg,
    /// Initial projection points; defaults to a copy of the input.
    #[arg(long, conflicts_with = "n_projections")]
    pub init: Option<std::path::PathBuf>,
    /// Start from this many randomly chosen input points.
    #[arg(long)]
    pub n_projections: Option<usize>,
    /// Max-norm residual for the full weighting scheme.
    #[arg(long, default_value_t = 1e-6)]
    pub cg_tol: f64,
    /// Per-iteration diagnostics CSV.
    #[arg(long)]
    pub diagnostics: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
pub struct MeanShiftArgs {
    /// Data points.
    pub input: std::path::PathBuf,
    /// Start points, one per line.
    #[arg(long)]
    pub seeds: std::path::PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1.0 / 32.0)]
    pub sigma2: f64,
    #[arg(long, default_value_t = 6.0)]
    pub h: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    /// Stop once a step is shorter than this fraction of h.
    #[arg(long, default_value_t = 1e-9)]
    pub step_tol: f64,
    /// Iterates and densities of every run.
    #[arg(long)]
    pub trajectory: Option<std::path::PathBuf>,
    /// Final iterates; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitKernelArgs {
    /// Number of sampled radii.
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    /// Hold the widest component at this standard deviation.
    #[arg(long)]
    pub fix_sigma3: Option<f64>,
    /// Export a published parameter set instead of fitting.
    #[arg(long, value_parser = ["clop", "ours", "ours_consistent"])]
    pub builtin: Option<String>,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    /// Parameter file.
    #[arg(long)]
    pub out: std::path::PathBuf,
    /// Residual and variance report CSV.
    #[arg(long)]
    pub report: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
pub struct DenoiseMeshArgs {
    pub input: std::path::PathBuf,
    pub output: std::path::PathBuf,
    /// l2, l1, gauss, lop or gamma:P,SIGMA2.
    #[arg(long, default_value = "lop")]
    pub loss: String,
    /// Normal filtering iterations.
    #[arg(long, default_value_t = 50)]
    pub iters: usize,
    #[arg(long, default_value_t = 0.3)]
    pub sigma: f64,
    /// Neighborhood radius in mean edge lengths.
    #[arg(long, default_value_t = 1.5)]
    pub radius_factor: f64,
    #[arg(long, default_value_t = 20)]
    pub vertex_iters: usize,
    /// Pull towards the input positions during the vertex update.
    #[arg(long, default_value_t = 0.001)]
    pub w: f64,
    /// Reference mesh for the mean angular distance.
    #[arg(long = "ref")]
    pub reference: Option<std::path::PathBuf>,
    /// Metrics CSV.
    #[arg(long)]
    pub metrics: Option<std::path::PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CorruptMode {
    GaussianMix,
    UniformVertex,
}

#[derive(Debug, Args)]
pub struct CorruptArgs {
    pub input: std::path::PathBuf,
    pub output: std::path::PathBuf,
    #[arg(long, value_enum)]
    pub mode: CorruptMode,
    /// Standard deviation of the noise class.
    #[arg(long, default_value_t = 0.5)]
    pub sigma_noise: f64,
    #[arg(long, default_value_t = 0.9)]
    pub frac_noise: f64,
    /// Standard deviation of the outlier class.
    #[arg(long, default_value_t = 5.0)]
    pub sigma_outlier: f64,
    #[arg(long, default_value_t = 0.1)]
    pub frac_outlier: f64,
    /// Maximum displacement in mean edge lengths.
    #[arg(long, default_value_t = 0.25)]
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Regularity,
    Surface,
    Angle,
    Density,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, value_enum)]
    pub metric: MetricArg,
    /// regularity: POINTS; surface: POINTS MESH; angle: MESH MESH;
    /// density: POINTS [EVAL_POINTS].
    #[arg(required = true, num_args = 1..=2)]
    pub inputs: Vec<std::path::PathBuf>,
    /// Window size for the density metric.
    #[arg(long, default_value_t = 6.0)]
    pub h: f64,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1.0 / 32.0)]
    pub sigma2: f64,
    /// Point weights for the density metric.
    #[arg(long, value_enum, default_value_t = WeightingArg::None)]
    pub weighting: WeightingArg,
    /// Report CSV; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Lib(igk::Error),
}

impl From<igk::Error> for Failure {
    fn from(e: igk::Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Lib(e) if e.is_io() => 2,
            Failure::Lib(e) if e.is_numeric() => 3,
            Failure::Lib(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => f.write_str(m),
            Failure::Lib(e) => write!(f, "{e}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
