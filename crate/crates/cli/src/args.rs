use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(
    name = "polarity",
    version,
    about = "Polarity transform, polar calculus and polar PDE paths"
)]
pub struct Cli {
    /// TOML file with default settings.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Legendre, polar, J or geometric envelope of one function.
    Transform(TransformArgs),
    /// Geometric inf-convolution of two functions.
    Ginf(GinfArgs),
    /// Polar Hamilton-Jacobi path `P(Pf + t g)`.
    Hj(HjArgs),
    /// Polar Monge-Ampere interpolation between two functions.
    Interpolate(InterpolateArgs),
    /// Polar Monge-Ampere Cauchy path from a function and a velocity.
    Cauchy(CauchyArgs),
    /// Run a verification suite and report each check.
    Verify(VerifyArgs),
    /// Summarize a descriptor.
    Info(InfoArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Op {
    Legendre,
    Polar,
    J,
    Envelope,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GinfRoute {
    Dual,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InterpolateRoute {
    Dual,
    Ginf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Catalog {
    Builtin,
}

#[derive(Debug, Clone, Default, Args)]
pub struct DualOpts {
    /// Dual box: `R`, `lo,hi`, or `lo,hi` per axis.
    #[arg(long, value_name = "BOX", allow_hyphen_values = true)]
    pub dual_box: Option<String>,
    /// Dual nodes per axis: `N` or one odd count per axis.
    #[arg(long, value_name = "SHAPE")]
    pub dual_shape: Option<String>,
    /// Refuse results whose sups reach the box boundary.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputOpts {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Leave wall-clock data out of manifests and sidecars.
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TimeOpts {
    #[arg(long = "t-end", alias = "T", value_name = "T")]
    pub t_end: Option<f64>,
    /// Number of equally spaced frames on `[0, T]`.
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long, value_enum)]
    pub op: Op,
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    /// Output descriptor; stdout when absent.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub dual: DualOpts,
    #[command(flatten)]
    pub output: OutputOpts,
}

#[derive(Debug, Args)]
pub struct GinfArgs {
    #[arg(long, value_name = "FILE")]
    pub f: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub g: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "dual")]
    pub route: GinfRoute,
    #[command(flatten)]
    pub dual: DualOpts,
    #[command(flatten)]
    pub output: OutputOpts,
}

#[derive(Debug, Args)]
pub struct HjArgs {
    #[arg(long, value_name = "FILE")]
    pub f: PathBuf,
    /// Hamiltonian, sampled on the dual lattice.
    #[arg(long, value_name = "FILE")]
    pub g: PathBuf,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Also write residuals.csv and fail when a residual exceeds its tolerance.
    #[arg(long)]
    pub check: bool,
    #[command(flatten)]
    pub time: TimeOpts,
    #[command(flatten)]
    pub dual: DualOpts,
    #[command(flatten)]
    pub output: OutputOpts,
}

#[derive(Debug, Args)]
pub struct InterpolateArgs {
    #[arg(long, value_name = "FILE")]
    pub u0: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub u1: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "dual")]
    pub route: InterpolateRoute,
    #[command(flatten)]
    pub time: TimeOpts,
    #[command(flatten)]
    pub dual: DualOpts,
    #[command(flatten)]
    pub output: OutputOpts,
}

#[derive(Debug, Args)]
pub struct CauchyArgs {
    #[arg(long, value_name = "FILE")]
    pub u0: PathBuf,
    /// Initial velocity; may take negative values.
    #[arg(long, value_name = "FILE")]
    pub du0: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub time: TimeOpts,
    #[command(flatten)]
    pub dual: DualOpts,
    #[command(flatten)]
    pub output: OutputOpts,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// involution, jdual, hessian, variation, ginf, pde or all.
    #[arg(long)]
    pub suite: String,
    /// Run the suite on this function instead of the builtin catalog.
    #[arg(long = "in", value_name = "FILE", conflicts_with = "catalog")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub catalog: Option<Catalog>,
    /// Report file; stdout when absent.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputOpts,
}

#[derive(Debug, Args)]
pub struct InfoArgs {
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
}
