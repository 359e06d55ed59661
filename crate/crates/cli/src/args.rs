use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "ordinal-itr",
    version,
    about = "Ordinal individualized treatment rules by generalized outcome weighted learning"
)]
pub struct Cli {
    /// Worker threads for grid and replicate parallelism (0 = all cores).
    #[arg(long, global = true, env = "ORDINAL_ITR_THREADS")]
    pub threads: Option<usize>,

    /// JSON file with default options; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate train, tune and test sets for a simulation scenario.
    Simulate(SimulateArgs),
    /// Fit a rule at a single penalty and write a model file.
    Fit(FitArgs),
    /// Append predicted treatments to a CSV file.
    Predict(PredictArgs),
    /// Report the empirical value and, when truth is known, MISC.
    Evaluate(EvaluateArgs),
    /// Select the penalty (and bandwidth) on a tuning set.
    Tune(TuneArgs),
    /// Repeated K-fold estimate of the value of the tuned rule.
    Cv(CvArgs),
    /// Run the simulation benchmark and print a results table.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario id: L2, L3, L5, L7, N2, N3, N5, N7 or NP3.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Training size; the tuning set has the same size, the test set ten times.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub replicate: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Options shared by everything that fits a model.
#[derive(Debug, Args, Clone)]
pub struct ModelArgs {
    /// gowl, owl or pls_l1.
    #[arg(long)]
    pub method: Option<String>,
    /// linear or gaussian.
    #[arg(long)]
    pub kernel: Option<String>,
    /// Duplication strategy for gowl: full or partial.
    #[arg(long)]
    pub strategy: Option<String>,
    /// Constant reward shift for owl (default: data-driven shift).
    #[arg(long, allow_hyphen_values = true)]
    pub shift: Option<f64>,
    /// uniform, empirical, proportional_odds or column (default: column when
    /// present, else uniform).
    #[arg(long)]
    pub propensity: Option<String>,
    /// Number of treatment levels (default: largest observed treatment).
    #[arg(long)]
    pub levels: Option<usize>,
}

#[derive(Debug, Args, Clone)]
pub struct GridArgs {
    /// Comma-separated multipliers i, with λ = i / n.
    #[arg(long, value_delimiter = ',')]
    pub lambda_grid: Option<Vec<f64>>,
    /// Comma-separated Gaussian bandwidths.
    #[arg(long, value_delimiter = ',')]
    pub sigma_grid: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Output model file.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[command(flatten)]
    pub model_args: ModelArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Value,
    Misc,
    All,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Metric::All)]
    pub metric: Metric,
    #[arg(long)]
    pub propensity: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CriterionArg {
    Value,
    Misc,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub tune_set: PathBuf,
    /// Output model file for the selected cell.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum)]
    pub criterion: Option<CriterionArg>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub model_args: ModelArgs,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub model_args: ModelArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated scenario ids.
    #[arg(long, value_delimiter = ',')]
    pub scenarios: Option<Vec<String>>,
    /// Comma-separated methods: gowl-linear, gowl-gaussian, owl-linear,
    /// owl-gaussian, pls_l1.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Select tuning cells by misclassification instead of value.
    #[arg(long)]
    pub tune_by_misc: bool,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Write the table here as well as to stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}
