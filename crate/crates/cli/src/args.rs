use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "kerrqrm",
    version,
    about = "Mean-field steady states, stability and fluctuations of the dissipative Kerr quantum Rabi model"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Cavity loss rate in units of the cavity frequency
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub kappa: Option<f64>,
    /// Light-matter coupling
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Atomic frequency over cavity frequency
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Normalized Kerr strength 2KN/omega_c
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub u: Option<f64>,
    /// Number of atoms (fluctuation scaling only)
    #[arg(long, global = true)]
    pub n_atoms: Option<f64>,
    /// JSON parameter file; command-line flags take precedence
    #[arg(long, global = true, value_name = "FILE")]
    pub params: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write results here instead of stdout
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// All steady-state branches
    Steady,
    /// Routh and eigenvalue stability of every branch
    Stability,
    /// Landau coefficients, transition order and first-order geometry
    Landau,
    /// Tricritical point for the given beta
    Tcp,
    /// Normal-phase photon-number fluctuations
    Fluct,
    /// Quasi-static lambda sweep by time integration
    Sweep(SweepOpts),
    /// Two-parameter phase-diagram scan
    Scan(ScanOpts),
    /// Steady branches with stability along a lambda line
    Bifurcation(LineOpts),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Steady => "steady",
            Command::Stability => "stability",
            Command::Landau => "landau",
            Command::Tcp => "tcp",
            Command::Fluct => "fluct",
            Command::Sweep(_) => "sweep",
            Command::Scan(_) => "scan",
            Command::Bifurcation(_) => "bifurcation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
    Both,
}

// Options are optional on the command line so that values echoed in a JSON
// result can fill the gaps when that result is fed back with --params.

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct LineOpts {
    /// First lambda of the grid
    #[arg(long = "from")]
    pub from: Option<f64>,
    /// Last lambda of the grid
    #[arg(long = "to")]
    pub to: Option<f64>,
    /// Number of grid points
    #[arg(long)]
    pub points: Option<usize>,
}

impl LineOpts {
    pub fn merged(&self, file: &LineOpts) -> LineOpts {
        LineOpts {
            from: self.from.or(file.from),
            to: self.to.or(file.to),
            points: self.points.or(file.points),
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct SweepOpts {
    #[command(flatten)]
    #[serde(flatten)]
    pub line: LineOpts,
    #[arg(long, value_enum)]
    pub direction: Option<Direction>,
    /// Seed displacement of Q applied when the carried state is normal
    #[arg(long)]
    pub kick: Option<f64>,
}

impl SweepOpts {
    pub fn merged(&self, file: &SweepOpts) -> SweepOpts {
        SweepOpts {
            line: self.line.merged(&file.line),
            direction: self.direction.or(file.direction),
            kick: self.kick.or(file.kick),
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct ScanOpts {
    /// First axis as NAME:LO:HI:COUNT with NAME one of kappa, u, lambda, beta
    #[arg(long)]
    pub axis1: Option<String>,
    /// Second axis, same syntax
    #[arg(long)]
    pub axis2: Option<String>,
    /// Comma-separated subset of order,landau,steady,fluct
    #[arg(long)]
    pub quantities: Option<String>,
    /// Clip fluctuation values above this and flag the cell
    #[arg(long)]
    pub fluct_ceiling: Option<f64>,
}

impl ScanOpts {
    pub fn merged(&self, file: &ScanOpts) -> ScanOpts {
        ScanOpts {
            axis1: self.axis1.clone().or_else(|| file.axis1.clone()),
            axis2: self.axis2.clone().or_else(|| file.axis2.clone()),
            quantities: self.quantities.clone().or_else(|| file.quantities.clone()),
            fluct_ceiling: self.fluct_ceiling.or(file.fluct_ceiling),
        }
    }
}
