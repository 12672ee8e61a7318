//! Flag definitions. The `run` and `sweep-gamma` subcommands share the
//! problem-selection flags; `grid` is a hidden brute-force baseline used by
//! acceptance runs.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "mixfam",
    version,
    about = "Iterative minimization of G(P) = sum_x P(x) Psi[P](x) over mixture families"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Solve one problem instance and write result JSON plus an optional
    /// trace CSV. A comma-separated --gamma list runs a sweep instead.
    Run(RunArgs),
    /// Run the same instance at several gamma values from a shared initial
    /// point and tabulate convergence speed.
    SweepGamma(SweepArgs),
    /// Brute-force grid minimization over small alphabets.
    #[command(hide = true)]
    Grid(GridArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProblemKind {
    /// Channel capacity (Arimoto-Blahut at gamma = 1).
    Capacity,
    /// Random-coding reliability exponent; requires --alpha in [0.5, 1).
    Reliability,
    /// Strong-converse exponent; requires --alpha > 1.
    StrongConverse,
    /// Wiretap secrecy capacity over prefix channels; requires
    /// --eaves-channel, optional --v-size.
    Wiretap,
    /// Wiretap capacity of a degraded eavesdropper; --channel holds the
    /// joint (y,z) outputs, --z-size the eavesdropper alphabet.
    WiretapDegraded,
    /// Commitment capacity; optional --restrict limits the input alphabet.
    Commitment,
    /// Divergence minimization between a mixture family (--constraints)
    /// and an exponential family (--efamily).
    Em,
    /// Divergence maximization between the same pair of families.
    ReverseEm,
    /// Information bottleneck; requires --joint, --alpha, --beta.
    Ib,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algorithm {
    /// Exact family projection at every step.
    Exact,
    /// Inexact projections with a final selection rule and measured
    /// error terms.
    Approx,
    /// Constraints enforced by a penalty parameter updated with gradient
    /// steps instead of projections.
    Gradient,
}

/// Flags that pick the problem instance and solver behaviour; shared by all
/// subcommands.
#[derive(Args)]
pub struct ProblemArgs {
    #[arg(long, value_enum)]
    pub problem: ProblemKind,

    #[arg(long, value_enum, default_value = "exact")]
    pub algorithm: Algorithm,

    /// Channel file: JSON {"rows": [[...], ...]}, row-stochastic.
    #[arg(long)]
    pub channel: Option<PathBuf>,

    /// Eavesdropper channel file (wiretap), same schema as --channel.
    #[arg(long)]
    pub eaves_channel: Option<PathBuf>,

    /// Joint-source file: JSON {"joint": [[...], ...], "t_size": N}.
    #[arg(long)]
    pub joint: Option<PathBuf>,

    /// Mixture-family constraints: JSON {"features": [[...], ...],
    /// "targets": [...]}.
    #[arg(long)]
    pub constraints: Option<PathBuf>,

    /// Exponential family: JSON {"base": [...], "generators": [[...], ...]}.
    #[arg(long)]
    pub efamily: Option<PathBuf>,

    /// Renyi order (exponent problems) or compression weight (ib).
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Relevance weight (ib only).
    #[arg(long)]
    pub beta: Option<f64>,

    /// Prefix alphabet size for --problem wiretap.
    #[arg(long, default_value_t = 1)]
    pub v_size: usize,

    /// Eavesdropper alphabet size for --problem wiretap-degraded.
    #[arg(long)]
    pub z_size: Option<usize>,

    /// Acceleration parameter; comma-separated list sweeps. Defaults to
    /// the problem's recommended value.
    #[arg(long)]
    pub gamma: Option<String>,

    #[arg(long)]
    pub max_iter: Option<usize>,

    /// Stopping tolerance on gamma times the per-step KL divergence.
    #[arg(long)]
    pub tol: Option<f64>,

    /// RNG seed for restart sampling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Number of random restarts (exact algorithm only). Defaults to 8 on
    /// problems with known local minimizers, 0 otherwise.
    #[arg(long)]
    pub restarts: Option<usize>,

    /// Keep only these 1-based channel inputs (e.g. "1,2,3").
    #[arg(long)]
    pub restrict: Option<String>,
}

#[derive(Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,

    /// Result JSON path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Trace CSV path (single-gamma runs).
    #[arg(long)]
    pub trace: Option<PathBuf>,

    /// Directory for per-gamma traces and the summary table when --gamma
    /// is a list. Defaults to the current directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,

    /// Report the human summary in bits; machine output stays in nats.
    #[arg(long)]
    pub bits: bool,
}

#[derive(Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,

    /// Directory for per-gamma traces and summary.csv. Defaults to the
    /// current directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,

    /// Report the human summary in bits; machine output stays in nats.
    #[arg(long)]
    pub bits: bool,
}

#[derive(Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,

    /// Grid step is 1/resolution per simplex coordinate.
    #[arg(long, default_value_t = 200)]
    pub resolution: usize,

    /// Admission band for family membership of a grid point.
    #[arg(long, default_value_t = 1e-9)]
    pub band: f64,
}
