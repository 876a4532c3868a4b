//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "cvtomo", version, about = "Continuous-variable quantum state tomography")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML configuration; a run config for most commands, a sweep config for `sweep`.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Directory for outputs and the default location of inputs.
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    /// Upper bound on concurrently running sweep cells.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Seed for subset selection and noise.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Print the fully resolved configuration as TOML and exit.
    #[arg(long, global = true)]
    pub print_config: bool,

    /// Log more (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a target density matrix.
    GenState(GenStateArgs),
    /// Build a sampling grid and draw the measured subset.
    GenPovm(GenPovmArgs),
    /// Simulate measurement records for a state and POVM set.
    Simulate(SimulateArgs),
    /// Reconstruct a density matrix with the semidefinite program.
    ReconstructSdp(ReconstructSdpArgs),
    /// Filtered back-projection of a single-mode sinogram.
    ReconstructIrt(ReconstructIrtArgs),
    /// Evaluate the Wigner function of a density matrix.
    Wigner(WignerArgs),
    /// Fidelity, negativity and probe entropy of a density matrix.
    Metrics(MetricsArgs),
    /// Full pipeline for one configuration.
    Run(RunArgs),
    /// Fidelity against number of measured elements.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StateKind {
    Noon,
    HermiteGauss,
    SqueezedVacuum,
    DephasedCat,
    Fock,
    Coherent,
}

#[derive(Debug, Args)]
pub struct GenStateArgs {
    /// State family; defaults to the configured state.
    #[arg(long, value_enum)]
    pub state: Option<StateKind>,
    /// Fock level (fock) or Hermite order (hermite-gauss).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub zeta: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Dephasing of the cat state.
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub sigma_plus: Option<f64>,
    #[arg(long)]
    pub sigma_minus: Option<f64>,
    #[arg(long)]
    pub z_re: Option<f64>,
    #[arg(long)]
    pub z_im: Option<f64>,
    #[command(flatten)]
    pub trunc: TruncArgs,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TruncArgs {
    /// Highest Fock level kept per mode.
    #[arg(long)]
    pub cutoff: Option<usize>,
    #[arg(long)]
    pub modes: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridKindArg {
    Quadrature,
    Coherent,
    FockDemo,
}

#[derive(Debug, Args)]
pub struct GenPovmArgs {
    /// Grid family; defaults to the configured grid.
    #[arg(long, value_enum)]
    pub grid: Option<GridKindArg>,
    #[arg(long, default_value_t = 21)]
    pub q_count: usize,
    #[arg(long, default_value_t = 8)]
    pub theta_count: usize,
    #[arg(long, default_value_t = 10)]
    pub z_count: usize,
    /// Im z width credited to each coherent sample.
    #[arg(long)]
    pub z_cell_im: Option<f64>,
    #[command(flatten)]
    pub trunc: TruncArgs,
    /// Number of measured elements; defaults to the configured size, or the
    /// whole grid without a config file.
    #[arg(long)]
    pub subset: Option<usize>,
    /// Store element matrices alongside coordinates.
    #[arg(long)]
    pub materialize: bool,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_name = "FILE")]
    pub state_file: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub povm: Option<PathBuf>,
    /// Turn on Poisson noise at this relative level in percent.
    #[arg(long, value_name = "PERCENT", conflicts_with = "noiseless")]
    pub noise_snr: Option<f64>,
    /// Turn noise off even if the config enables it.
    #[arg(long)]
    pub noiseless: bool,
    /// Noise seed; falls back to `--seed`.
    #[arg(long)]
    pub noise_seed: Option<u64>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmArg {
    Ip,
    Admm,
}

#[derive(Debug, Args)]
pub struct ReconstructSdpArgs {
    #[arg(long, value_name = "FILE")]
    pub data: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub povm: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub algorithm: Option<AlgorithmArg>,
    /// Primal, dual and gap tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Drop the entropy line (the biased program).
    #[arg(long)]
    pub no_maxent: bool,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Minimum half-width of every measurement band.
    #[arg(long)]
    pub epsilon_floor: Option<f64>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReconstructIrtArgs {
    /// Sinogram CSV; alternatively build it from `--data` and `--povm`.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["data", "povm"])]
    pub sinogram: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub data: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub povm: Option<PathBuf>,
    /// Write the sinogram built from records here.
    #[arg(long, value_name = "FILE")]
    pub sinogram_out: Option<PathBuf>,
    /// Ramp-filter cutoff.
    #[arg(long)]
    pub kc: Option<f64>,
    /// Output axis `lo:step:hi`, used for both q and p.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Also extract the (possibly non-physical) density matrix.
    #[arg(long, value_name = "FILE")]
    pub rho_out: Option<PathBuf>,
    #[arg(long)]
    pub cutoff: Option<usize>,
}

#[derive(Debug, Args)]
pub struct WignerArgs {
    #[arg(long, value_name = "FILE")]
    pub rho: Option<PathBuf>,
    /// Axis `lo:step:hi` for q (and p unless `--p-grid` is given).
    #[arg(long, default_value = "-5:0.1:5", allow_hyphen_values = true)]
    pub grid: String,
    #[arg(long, allow_hyphen_values = true)]
    pub p_grid: Option<String>,
    /// Plotted mode of a two-mode state.
    #[arg(long, default_value_t = 1)]
    pub plot_mode: usize,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub fixed_q: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub fixed_p: f64,
    /// Full four-dimensional function of a two-mode state, one row per point.
    #[arg(long)]
    pub full: bool,
    /// Also write the grid as JSON.
    #[arg(long, value_name = "FILE")]
    pub json: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long, value_name = "FILE")]
    pub rho: Option<PathBuf>,
    /// Target state for fidelity and trace distance.
    #[arg(long, value_name = "FILE")]
    pub target: Option<PathBuf>,
    /// POVM set whose elements serve as entropy probes.
    #[arg(long, value_name = "FILE")]
    pub probes: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Sdp,
    SdpBiased,
    Irt,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long)]
    pub subset: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated, strictly increasing subset sizes.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub repeats: Option<usize>,
}
