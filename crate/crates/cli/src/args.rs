use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "singcert", version, about = "Certified radii and charts for the inverse, implicit, rank, splitting and Morse theorems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a certificate and print its radii and bounds.
    Bounds {
        #[arg(value_enum)]
        theorem: Theorem,
        #[command(flatten)]
        common: Common,
    },
    /// Build a certificate and check its conclusions by sampling.
    Verify {
        #[arg(value_enum)]
        theorem: Theorem,
        #[command(flatten)]
        common: Common,
        /// Override the main sample count of the verifier.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Critical points, openness certificates and Morse perturbations on the unit ball.
    Morse {
        #[arg(value_enum)]
        action: MorseAction,
        #[command(flatten)]
        common: Common,
        /// Perturbation size for `perturb`.
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        /// Perturbed function for `check-openness`.
        #[arg(long)]
        fbar: Option<String>,
        /// Grid points per axis for locating critical points.
        #[arg(long = "search-grid")]
        search_grid: Option<usize>,
    },
    /// List the built-in example functions.
    Catalog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Theorem {
    Inverse,
    Implicit,
    Rank,
    Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MorseAction {
    Analyze,
    Certify,
    Perturb,
    CheckOpenness,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Polynomial map, components separated by `;`, variables x1..xn.
    #[arg(long = "fn", conflicts_with = "catalog")]
    pub function: Option<String>,
    /// Name of a built-in example (see `singcert catalog`).
    #[arg(long)]
    pub catalog: Option<String>,
    /// Number of variables, if not implied by the expression.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Base point, comma separated; a single value is broadcast.
    #[arg(long, allow_hyphen_values = true)]
    pub at: Option<String>,
    /// Smoothness order k.
    #[arg(long)]
    pub k: Option<usize>,
    /// Grid points per axis for the sampled C^k bound.
    #[arg(long, default_value_t = 21)]
    pub grid: usize,
    /// Rank tolerance (split) or merge radius for critical points (morse).
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Entropy constant c(n, k) of the density construction.
    #[arg(long = "c-entropy", default_value_t = 1.0)]
    pub c_entropy: f64,
    /// Declared C^k bound, used instead of sampling.
    #[arg(long = "K")]
    pub k_norm: Option<f64>,
    /// Radius of the ball carrying the C^k bound (default 1 when sampled,
    /// 1e6 when declared with --K).
    #[arg(long)]
    pub radius: Option<f64>,
    /// Implicit: number of parameter variables (the leading ones).
    #[arg(long)]
    pub m: Option<usize>,
    /// Rank: the constant rank p.
    #[arg(long)]
    pub p: Option<usize>,
    /// Write the JSON report here as well as to stdout.
    #[arg(long)]
    pub json: Option<std::path::PathBuf>,
    /// Write the scalar fields of the report as CSV.
    #[arg(long)]
    pub csv: Option<std::path::PathBuf>,
}
