//! `pie`: fit sparse quadratic interaction models, run simulation studies
//! and noise-augmentation experiments from the command line.

mod experiment;
mod fit;
mod input;
mod output;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pie_core::admm::SolverOptions;
use pie_core::simulation::{LawKind, Method, ModelKind};
use pie_core::tuning::MainEffectsSource;
use pie_core::{PieError, PieOptions};

/// Exit status for input and usage errors.
const EXIT_INPUT: u8 = 2;
/// Exit status when the selected fit hit the iteration limit.
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] PieError),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Write { .. } => 1,
            _ => EXIT_INPUT,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "pie",
    version,
    about = "Penalized interaction estimation for sparse quadratic regression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a model to a CSV file and write a report.
    Fit(FitArgs),
    /// Run a Monte Carlo study on a synthetic model.
    Simulate(SimulateArgs),
    /// Augment real covariates with noise and count selected interactions
    /// over random subsamples.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitMethod {
    Piey,
    Pier,
    AllPairs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct TuningArgs {
    /// ADMM step size.
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    /// Relative ADMM stopping tolerance.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    /// Fit a single penalty instead of a grid.
    #[arg(long, conflicts_with_all = ["grid_points", "grid_ratio"])]
    lambda: Option<f64>,
    /// Grid size [default: 50].
    #[arg(long)]
    grid_points: Option<usize>,
    /// Smallest grid value as a fraction of the largest [default: 0.01].
    #[arg(long)]
    grid_ratio: Option<f64>,
    /// Cross-validation folds for the main-effect LASSO.
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Include LASSO-selected main effects in the response-based refit.
    #[arg(long)]
    refit_main: bool,
    /// Refits with more columns than this fraction of the rows are not
    /// eligible for BIC selection.
    #[arg(long, default_value_t = 0.5)]
    max_df_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl TuningArgs {
    pub fn options(&self) -> PieOptions {
        let d = PieOptions::default();
        PieOptions {
            solver: SolverOptions {
                rho: self.rho,
                tol: self.tol,
                max_iter: self.max_iter,
            },
            grid_points: self.grid_points.unwrap_or(d.grid_points),
            grid_ratio: self.grid_ratio.unwrap_or(d.grid_ratio),
            lambda: self.lambda,
            folds: self.folds,
            seed: self.seed,
            refit_main: self.refit_main,
            main_effects: MainEffectsSource::Lasso,
            max_df_fraction: self.max_df_fraction,
        }
    }
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    /// Name of the response column; every other column is a covariate.
    #[arg(long)]
    response: String,
    #[arg(long, value_enum, default_value_t = FitMethod::Piey)]
    method: FitMethod,
    #[command(flatten)]
    tuning: TuningArgs,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: PieError| e.to_string())
}

fn parse_law(s: &str) -> Result<LawKind, String> {
    s.parse().map_err(|e: PieError| e.to_string())
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: PieError| e.to_string())
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// m1, m2, m3, m4 or robustness:<d>.
    #[arg(long, value_parser = parse_model)]
    model: ModelKind,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    p: usize,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    /// gaussian_ar, factor_uniform, factor_t5, factor_laplace or
    /// gaussian_identity.
    #[arg(long, value_parser = parse_law, default_value = "gaussian_ar")]
    law: LawKind,
    /// AR coefficient of the covariate covariance.
    #[arg(long, default_value_t = 0.5)]
    ar: f64,
    /// Comma-separated subset of piey, pier, all_pairs, oracle.
    #[arg(long, value_parser = parse_method, value_delimiter = ',', default_value = "piey")]
    methods: Vec<Method>,
    /// Standard deviation of the additive noise.
    #[arg(long, default_value_t = 1.0)]
    noise_sd: f64,
    /// Also report wall-clock times (makes output run-dependent).
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    tuning: TuningArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    response: String,
    /// 1: noise columns only; 2: noise columns plus two planted interactions.
    #[arg(long)]
    experiment: u32,
    #[arg(long, value_enum, default_value_t = FitMethod::Piey)]
    method: FitMethod,
    #[arg(long, default_value_t = 100)]
    subsamples: usize,
    #[arg(long, default_value_t = 400)]
    subsample_size: usize,
    #[command(flatten)]
    tuning: TuningArgs,
    /// Frequency matrix CSV; a JSON summary is written next to it.
    #[arg(long)]
    out: PathBuf,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("PIE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Input(format!("PIE_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Input(format!("cannot configure {n} threads: {e}")))
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    configure_threads()?;
    let converged = match cli.command {
        Command::Fit(args) => fit::run(&args)?,
        Command::Simulate(args) => simulate::run(&args)?,
        Command::Experiment(args) => experiment::run(&args)?,
    };
    Ok(if converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NOT_CONVERGED)
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
