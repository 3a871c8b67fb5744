use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "helmgrid", version, about = "Holomorphic embedding power flow and voltage-stability tools")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the power flow by HEM and Newton–Raphson and compare the results.
    Solve(SolveArgs),
    /// Estimate the saddle-node bifurcation point.
    Snbp(SnbpArgs),
    /// Per-bus σ indices at one loading.
    Sigma(SigmaArgs),
    /// Rank weak buses by V–Q sensitivity and compare them with modal analysis.
    Weakbus(WeakbusArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sigma,
    Polezero,
    Both,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Case file: MATPOWER `.m` or helmgrid `.json`.
    pub case: PathBuf,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Convert PV buses to PQ at their solved operating point (MATPOWER input only).
    #[arg(long)]
    pub all_pq: bool,
    /// Multiply every reactive load by this factor before solving (MATPOWER input only).
    #[arg(long)]
    pub q_scale: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    /// Injection scale factor.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 60)]
    pub n_terms: usize,
    /// Padé order `[L/M]`; near-diagonal by default.
    #[arg(long, num_args = 2, value_names = ["L", "M"])]
    pub pade: Option<Vec<usize>>,
    /// Largest power-balance residual accepted from the HEM solution.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct SnbpArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value_t = Method::Both)]
    pub method: Method,
    #[arg(long, default_value_t = 50)]
    pub n_terms: usize,
    /// Padé order `[L/M]` for the σ series.
    #[arg(long, num_args = 2, value_names = ["L", "M"])]
    pub pade: Option<Vec<usize>>,
    /// Lowest loading scanned.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Highest loading scanned; start of the pole/zero iteration.
    #[arg(long, default_value_t = 5.0)]
    pub ceiling: f64,
    /// Skip the Newton–Raphson bisection reference.
    #[arg(long)]
    pub no_oracle: bool,
    /// Also write min-σ-condition vs λ as CSV here.
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SigmaArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 50)]
    pub n_terms: usize,
    #[arg(long, num_args = 2, value_names = ["L", "M"])]
    pub pade: Option<Vec<usize>>,
    /// Also write the σ-plane points and the parabola boundary as CSV here.
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WeakbusArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 5)]
    pub top: usize,
    /// Reactive increment in MVAr.
    #[arg(long, default_value_t = 1.0)]
    pub dq_mvar: f64,
    #[arg(long, default_value_t = 2)]
    pub n_terms: usize,
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Solve(a) => &a.common,
            Command::Snbp(a) => &a.common,
            Command::Sigma(a) => &a.common,
            Command::Weakbus(a) => &a.common,
        }
    }
}
