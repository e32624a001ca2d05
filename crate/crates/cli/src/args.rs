use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "tucker", version, about = "Deterministic and randomized Tucker decompositions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic tensor to a .dts (dense) or .tns (sparse) file.
    Generate(GenerateArgs),
    /// Decompose a tensor file once and optionally save the model.
    Decompose(DecomposeArgs),
    /// Run one or more algorithms on a tensor file over several trials.
    Eval(EvalArgs),
    /// Generate a fresh synthetic tensor per trial and time each algorithm on it.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeneratorKind {
    /// Gaussian core times Gaussian factors.
    LowRank,
    /// `(i^5 + j^5 + ..)^(-1/5)` with one-based indices.
    Function,
    /// Sum of 200 sparse rank-one terms.
    SparseCp,
    /// `1 / (i_1 + .. + i_N - N + 1)` with one-based indices.
    Hilbert,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplingArg {
    Uniform,
    LengthSquared,
}

#[derive(Debug, Clone, Args)]
pub struct GeneratorArgs {
    #[arg(long, value_enum, default_value = "low-rank")]
    pub generator: GeneratorKind,
    /// Mode sizes, e.g. `100,100,100`.
    #[arg(long, value_delimiter = ',', required = true)]
    pub dims: Vec<usize>,
    /// Multilinear rank of the low-rank generator (defaults to `--rank`).
    #[arg(long, value_delimiter = ',')]
    pub gen_rank: Option<Vec<usize>>,
    /// Weight of the ten leading sparse-cp terms.
    #[arg(long, default_value_t = 1000.0)]
    pub gamma: f64,
    /// Probability that a sparse-cp component entry is nonzero.
    #[arg(long, default_value_t = 0.05)]
    pub sparsity: f64,
    /// Add Gaussian noise at this signal-to-noise ratio in dB.
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db: Option<f64>,
}

/// Algorithm selection and tuning shared by `decompose`, `eval` and `bench`.
#[derive(Debug, Clone, Args)]
pub struct TuningArgs {
    /// Target multilinear rank, e.g. `10,12,8`.
    #[arg(long, value_delimiter = ',', required = true)]
    pub rank: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Oversampling `p` of random projections (default 10).
    #[arg(long)]
    pub oversampling: Option<usize>,
    /// Power iterations `q` of random projections (default 2).
    #[arg(long)]
    pub power: Option<usize>,
    /// R-PET range sketch sizes, one per mode.
    #[arg(long, value_delimiter = ',')]
    pub pet_k: Option<Vec<usize>>,
    /// R-PET core sketch sizes, one per mode.
    #[arg(long, value_delimiter = ',')]
    pub pet_s: Option<Vec<usize>>,
    /// Fiber sampling distribution of R-ST and R-HOID.
    #[arg(long, value_enum, default_value = "uniform")]
    pub dist: SamplingArg,
    /// Sample fibers with replacement.
    #[arg(long)]
    pub replacement: bool,
    /// Zero-based mode processing order of the sequential algorithms.
    #[arg(long, value_delimiter = ',')]
    pub mode_order: Option<Vec<usize>>,
    /// Iteration cap of the iterative algorithms.
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Stopping tolerance on the change in fit.
    #[arg(long)]
    pub tol: Option<f64>,
    /// CP rank for `cp-accel`.
    #[arg(long)]
    pub cp_rank: Option<usize>,
    /// Tucker compression used by `cp-accel`.
    #[arg(long, default_value = "r-sthosvd")]
    pub tucker_algo: String,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,
    /// Rank of the low-rank generator.
    #[arg(long, value_delimiter = ',')]
    pub rank: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Destination; the extension picks the format.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// Tensor file (.dts or .tns).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub algo: String,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Metrics CSV (stdout if omitted).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Directory for the core and factor matrices as .dts files.
    #[arg(long)]
    pub save_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated algorithms.
    #[arg(long, value_delimiter = ',', required = true)]
    pub algo: Vec<String>,
    #[command(flatten)]
    pub tuning: TuningArgs,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub algo: Vec<String>,
    #[command(flatten)]
    pub tuning: TuningArgs,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}
