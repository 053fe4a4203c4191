use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "deft",
    version,
    about = "Dynamic graph learning with evolving spectral wavelet filters"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a dynamic SBM and write it as a snapshots file.
    Generate(GenerateArgs),
    /// Train a model, writing a checkpoint, the loss curve and test metrics.
    Train(TrainArgs),
    /// Evaluate a checkpoint on the validation or test range.
    Eval(EvalArgs),
    /// Run the lemma verifiers on the shipped fixtures.
    VerifyLemmas(CommonArgs),
    /// Sample the learned filter responses at one timestep.
    FilterResponse(FilterResponseArgs),
    /// Impulse responses of the learned filter at one node.
    Wavelet(WaveletArgs),
    /// Time the forward pass on random regular graphs of growing size.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "deft-out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Lp,
    Ec,
    Nc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AggregatorArg {
    Mlp,
    Gat,
    Transformer,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelFlags {
    #[arg(long, value_enum)]
    pub task: Option<TaskArg>,
    #[arg(long)]
    pub filter_order: Option<usize>,
    /// Comma-separated wavelet scales.
    #[arg(long)]
    pub scales: Option<String>,
    #[arg(long, value_enum)]
    pub aggregator: Option<AggregatorArg>,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Starting point before the config file: default, separable, brain_like, elliptic_like.
    #[arg(long, default_value = "default")]
    pub preset: String,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub snapshots: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelFlags,
    /// Snapshots file.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Repetitions with seeds seed, seed+1, ...; reports mean±std.
    #[arg(long)]
    pub runs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PhaseArg {
    Val,
    Test,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    pub phase: PhaseArg,
}

#[derive(Debug, Clone, Args)]
pub struct FilterResponseArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub timestep: usize,
    /// Grid points on `[0, λ_max]`.
    #[arg(long, default_value_t = 101)]
    pub grid: usize,
}

#[derive(Debug, Clone, Args)]
pub struct WaveletArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub timestep: usize,
    #[arg(long)]
    pub node: usize,
    /// Comma-separated scales; defaults to the checkpoint's.
    #[arg(long)]
    pub scales: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelFlags,
    /// Comma-separated node counts, ascending.
    #[arg(long, default_value = "1024,2048,4096,8192")]
    pub sizes: String,
    #[arg(long, default_value_t = 8)]
    pub degree: usize,
    #[arg(long, default_value_t = 16)]
    pub features: usize,
}
