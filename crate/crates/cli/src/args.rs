use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use eivreg::mc::Format;

#[derive(Debug, Parser)]
#[command(
    name = "eivreg",
    version,
    about = "Slope estimation under functional measurement error with replicated regressors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate slope and intercept from a `y,x1,...,xr` CSV file.
    Estimate(EstimateArgs),
    /// Run a Monte Carlo study from a JSON config or a preset.
    Simulate(SimulateArgs),
    /// Exact bias and MSE from the Poisson-mixture series.
    Exact(ExactArgs),
    /// Run numerical verification suites; exits 1 on any failure.
    Verify(VerifyArgs),
    /// Write a dataset whose canonical statistics take prescribed values.
    Fixture(FixtureArgs),
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output table format.
    #[arg(long, default_value = "csv", value_parser = parse_format)]
    pub format: Format,
    /// Print numbers in shortest round-trip form instead of 6 significant digits.
    #[arg(long)]
    pub full_precision: bool,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse()
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated estimator ids, e.g. `LS,BR1,TGG,ML`.
    #[arg(long, default_value = "LS,BR1,BR2,BR3,ML,IR,MM")]
    pub estimators: String,
    /// Known `σ² = σ_x²/r`, needed by the known-variance estimators.
    #[arg(long)]
    pub known_sigma2: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub bayes_c1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub bayes_c2: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Twelve cells: `σ_ξ² ∈ {0.1, 5}`, `σ² ∈ {1, 10}`, `n ∈ {10, 30, 100}`.
    Table4,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Overrides the config; the preset default is 100000.
    #[arg(long)]
    pub reps: Option<u64>,
    /// Overrides the config; the preset default is 1. Zero draws a seed from
    /// system entropy and echoes it in the output header.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to `EIVREG_THREADS`, then all cores.
    #[arg(long)]
    pub workers: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    Bias,
    Mse,
    Both,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[arg(long)]
    pub p: u32,
    #[arg(long)]
    pub m: u32,
    /// Poisson mean `‖ξ‖²/(2σ²)`.
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, default_value_t = -5.0, allow_hyphen_values = true)]
    pub beta: f64,
    #[arg(long, default_value_t = 10.0)]
    pub tau2: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    /// Comma-separated ids among LS, BRl, STl, BRlX2, TLS, TLS2, TBRl, GG, TGG.
    #[arg(long, default_value = "LS,BR1")]
    pub estimators: String,
    #[arg(long, value_enum, default_value = "both")]
    pub quantity: Quantity,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteName {
    Domination,
    Hudson,
    Bias,
    Identities,
    All,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: SuiteName,
    /// Add a factor that violates the domination conditions, to exercise the
    /// failure path.
    #[arg(long)]
    pub inject_bad_psi: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub r: u32,
    /// `UᵗZ`
    #[arg(long, allow_hyphen_values = true)]
    pub t_uz: f64,
    /// `‖U‖²`
    #[arg(long)]
    pub u_sq: f64,
    /// `‖Z‖²`
    #[arg(long)]
    pub z_sq: f64,
    /// Within-group sum of squares `S`.
    #[arg(long)]
    pub s: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub u0: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub z0: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
