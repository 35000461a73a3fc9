#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pdtradeoff::divergence::DivergenceKind;
use pdtradeoff::tradeoff::SolverMethod;

/// Perception-distortion tradeoff toolkit for finite degradation models.
#[derive(Debug, Parser)]
#[command(name = "pdtradeoff", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Trace P(D) over a multiplier schedule and write the curve as CSV.
    Curve(CurveArgs),
    /// Closed-form P(D) for a standard Gaussian source in Gaussian noise.
    Gaussian(GaussianArgs),
    /// Minimal distortion, and minimal distortion at perfect perceptual quality.
    Bounds(BoundsArgs),
    /// Bayes and sampling estimators, as kernels or as a JSON report.
    Estimators(EstimatorsArgs),
    /// Admissible set and scatter plot of algorithms on the perception-distortion plane.
    Plane(PlaneArgs),
    /// Search for observation laws under which the optimal estimator stops reproducing the prior.
    Probe(ProbeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Divergence {
    Tv,
    Kl,
    Js,
    Hellinger,
    Chi2,
    W1,
}

impl From<Divergence> for DivergenceKind {
    fn from(d: Divergence) -> Self {
        match d {
            Divergence::Tv => DivergenceKind::TotalVariation,
            Divergence::Kl => DivergenceKind::KullbackLeibler,
            Divergence::Js => DivergenceKind::JensenShannon,
            Divergence::Hellinger => DivergenceKind::Hellinger,
            Divergence::Chi2 => DivergenceKind::ChiSquare,
            Divergence::W1 => DivergenceKind::Wasserstein1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Distortion {
    /// (x − x̂)², needs numeric X values.
    Square,
    /// 1 when the labels differ.
    ZeroOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Exact,
    Iterative,
}

impl From<Method> for SolverMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Exact => SolverMethod::Exact,
            Method::Iterative => SolverMethod::Iterative,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Mmse,
    Map,
    Ps,
    Rand,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    /// Model JSON file.
    pub model: PathBuf,
    #[arg(long, value_enum, default_value = "kl")]
    pub divergence: Divergence,
    #[arg(long, value_enum, default_value = "square")]
    pub distortion: Distortion,
    /// Comma-separated multipliers (default: 24 log-spaced values in [1e-3, 1e3]).
    #[arg(long)]
    pub lambdas: Option<String>,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "exact")]
    pub method: Method,
    /// Iteration cap for the iterative method.
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Certificate above which a point is flagged.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Solve every multiplier from scratch.
    #[arg(long)]
    pub no_warm_start: bool,
}

#[derive(Debug, Args)]
pub struct GaussianArgs {
    /// Noise standard deviation.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Distortion levels: comma-separated values or lo:hi:count
    /// (default: 200 levels from the minimum to twice the perfect-quality distortion gap).
    #[arg(long)]
    pub d_grid: Option<String>,
    /// Output CSV path (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    pub model: PathBuf,
    #[arg(long, value_enum, default_value = "square")]
    pub distortion: Distortion,
}

#[derive(Debug, Args)]
pub struct EstimatorsArgs {
    pub model: PathBuf,
    #[arg(long, value_enum)]
    pub which: Which,
    #[arg(long, value_enum, default_value = "square")]
    pub distortion: Distortion,
    /// Print a JSON report instead of the kernel.
    #[arg(long)]
    pub report: bool,
    /// Output path (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlaneArgs {
    /// CSV with header name,distortion,perception.
    pub records: PathBuf,
    #[arg(long)]
    pub out_svg: Option<PathBuf>,
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    pub model: PathBuf,
    #[arg(long, value_enum, default_value = "square")]
    pub distortion: Distortion,
    /// Comma-separated mixing weights in (0, 1].
    #[arg(long, default_value = "0.9,0.5,0.1")]
    pub alphas: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Curve(a) => commands::curve(&a),
        Command::Gaussian(a) => commands::gaussian(&a),
        Command::Bounds(a) => commands::bounds(&a),
        Command::Estimators(a) => commands::estimators(&a),
        Command::Plane(a) => commands::plane(&a),
        Command::Probe(a) => commands::probe(&a),
    };
    match result {
        Ok(code) => code.into(),
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code.into()
        }
    }
}
