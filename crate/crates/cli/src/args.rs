use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

/// IPCW kernel estimation for right-censored regression.
#[derive(Debug, Parser, Serialize)]
#[command(name = "ipcw", version)]
pub struct Cli {
    /// JSON object of flag values; explicit flags take precedence.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Worker threads (default: $IPCW_THREADS, else all cores).
    #[arg(long, global = true)]
    #[serde(skip)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Kaplan-Meier estimate of the censoring distribution at its jumps.
    Km(KmArgs),
    /// IPCW regression of psi(Y) on X.
    Fit(FitArgs),
    /// Conditional distribution function P(Y <= t | X = x).
    Cdf(TimeArgs),
    /// Conditional density of Y at t given X = x.
    Density(SmoothTimeArgs),
    /// Conditional hazard of Y at t given X = x.
    Hazard(SmoothTimeArgs),
    /// Point estimates with simultaneous confidence bands.
    Bands(BandsArgs),
    /// Simulation studies on the cosine design.
    #[command(subcommand)]
    Simulate(SimulateCommand),
}

#[derive(Debug, Args, Serialize)]
pub struct KmArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Output CSV (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EstimationArgs {
    /// Dataset CSV with header z,delta,x1[,x2,...].
    #[arg(long)]
    pub data: PathBuf,
    /// Single bandwidth.
    #[arg(long, conflicts_with = "h_grid")]
    pub h: Option<f64>,
    /// Bandwidth grid lo:hi:steps.
    #[arg(long)]
    pub h_grid: Option<String>,
    #[arg(long, default_value = "epanechnikov")]
    pub kernel: String,
    /// Working cutoff tau0.
    #[arg(long)]
    pub tau0: Option<f64>,
    /// Known censoring distribution as a CSV jump table (u,G); Kaplan-Meier
    /// is used otherwise.
    #[arg(long)]
    pub known_g: Option<PathBuf>,
    /// Single evaluation point x1[,x2,...].
    #[arg(long, conflicts_with_all = ["region", "grid"])]
    pub at: Option<String>,
    /// Evaluation region lo:hi[,lo:hi...] (default: covariate range).
    #[arg(long)]
    pub region: Option<String>,
    /// Grid points per axis.
    #[arg(long, default_value_t = 51)]
    pub grid: usize,
    /// Output CSV (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub est: EstimationArgs,
    /// identity or indicator:t.
    #[arg(long, default_value = "identity")]
    pub psi: String,
}

#[derive(Debug, Args, Serialize)]
pub struct TimeArgs {
    #[command(flatten)]
    pub est: EstimationArgs,
    /// Response value t.
    #[arg(long)]
    pub t: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct SmoothTimeArgs {
    #[command(flatten)]
    pub est: EstimationArgs,
    #[arg(long)]
    pub t: f64,
    /// Response-direction bandwidth.
    #[arg(long)]
    pub ell: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct BandsArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "identity")]
    pub psi: String,
    #[arg(long, default_value = "epanechnikov")]
    pub kernel: String,
    #[arg(long)]
    pub tau0: Option<f64>,
    #[arg(long)]
    pub known_g: Option<PathBuf>,
    /// Floor constant theta > 1 (default e).
    #[arg(long)]
    pub theta: Option<f64>,
    /// Region I as lo:hi[,lo:hi...] (default: covariate range).
    #[arg(long)]
    pub region: Option<String>,
    /// fixed:h | power:A:delta0 | table:file.csv
    #[arg(long)]
    pub bandwidth: String,
    /// Reference bounds c1:c2:hn checked against tabulated bandwidths.
    #[arg(long)]
    pub bounds: Option<String>,
    /// Grid points per axis.
    #[arg(long, default_value_t = 201)]
    pub grid: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Render estimate and band (and truth, if given) as SVG.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Tabulated true regression, CSV x,truth (d = 1).
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SimulateCommand {
    /// Draw one censored sample.
    Generate(GenerateArgs),
    /// Distribution of epsilon1(h, n) over replications.
    Epsilon1(Epsilon1Args),
    /// Simultaneous coverage of inflated bands.
    Coverage(CoverageArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct Epsilon1Args {
    /// Sample sizes, comma separated.
    #[arg(long, default_value = "2000")]
    pub n: String,
    /// Bandwidths, comma separated.
    #[arg(long, default_value = "0.15")]
    pub h: String,
    #[arg(long, default_value_t = 2000)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Grid points on [-1, 1].
    #[arg(long, default_value_t = 201)]
    pub grid: usize,
    /// Directory for replications.csv and summary.json (default: summary on stdout).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Also emit estimate/band/truth and epsilon1 quantile figures.
    #[arg(long)]
    pub figures: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct CoverageArgs {
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    /// fixed:h | power:A:delta0
    #[arg(long, default_value = "fixed:0.15")]
    pub bandwidth: String,
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub inflation: f64,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long, default_value_t = 201)]
    pub grid: usize,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub figures: bool,
}
