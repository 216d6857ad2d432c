use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod run;

/// Exit status for invalid arguments or parameters.
pub const EXIT_USAGE: u8 = 2;
/// Exit status for unreadable or malformed input data.
pub const EXIT_DATA: u8 = 3;
/// Exit status when an optimizer stopped before converging.
pub const EXIT_NOT_CONVERGED: u8 = 4;

#[derive(Debug, Parser, Serialize)]
#[command(name = "asymtail", version, about = "Asymmetric tail dependence copula toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct Common {
    /// Seed of every random stream
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Use composite Simpson quadrature with this many subintervals
    #[arg(long, global = true)]
    pub quad_n: Option<usize>,
    /// Output file (a directory for `study`)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Draw a sample from a copula
    Simulate(SimulateArgs),
    /// Fit a copula by full or censored likelihood
    Fit(FitArgs),
    /// Fit time-varying parameters by kernel-weighted local likelihood
    Localfit(LocalFitArgs),
    /// Tail dependence curves and limits, or moving-window estimates
    Chi(ChiArgs),
    /// Run a seeded simulation study
    Study(StudyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    /// delta_l rising from 0.2 to 0.6, delta_u = 0.3, rho = 0.5
    #[value(alias = "paper-4.3.3")]
    RisingLower,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// Model parameters `delta_l,delta_u,rho`
    #[arg(long, value_delimiter = ',', value_name = "DELTA_L,DELTA_U,RHO", conflicts_with_all = ["gumbel", "gaussian", "dynamic"])]
    pub model: Option<Vec<f64>>,
    /// Gumbel copula with parameter alpha in (0, 1]
    #[arg(long, conflicts_with_all = ["gaussian", "dynamic"])]
    pub gumbel: Option<f64>,
    /// Gaussian copula with this correlation
    #[arg(long, conflicts_with = "dynamic")]
    pub gaussian: Option<f64>,
    /// Time-varying model parameters, one draw per index
    #[arg(long, value_enum)]
    pub dynamic: Option<Schedule>,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
}

#[derive(Debug, Args, Serialize, Clone)]
pub struct InputArgs {
    /// CSV of paired observations
    #[arg(long, conflicts_with = "prices", required_unless_present = "prices")]
    pub input: Option<PathBuf>,
    /// Columns of `--input` to pair (default: u1,u2 or x1,x2)
    #[arg(long, value_delimiter = ',', value_name = "A,B")]
    pub columns: Option<Vec<String>>,
    /// Two single-asset CSV files, aligned on their common dates
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    pub prices: Option<Vec<PathBuf>>,
    #[arg(long, default_value = "date")]
    pub date_column: String,
    #[arg(long, default_value = "close")]
    pub value_column: String,
    /// `--prices` files hold residuals rather than prices
    #[arg(long)]
    pub residuals: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "model")]
    pub family: String,
    /// Censored likelihood, e.g. `scheme=1,tl=0.1` (also `tu=`, `tie=margin2-priority`)
    #[arg(long)]
    pub censor: Option<String>,
    /// Parametric bootstrap replicates
    #[arg(long)]
    pub boot: Option<usize>,
    /// Bootstrap interval level
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Optimizer iteration budget per fit
    #[arg(long, default_value_t = 2000)]
    pub max_iter: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct LocalFitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "model")]
    pub family: String,
    #[arg(long)]
    pub censor: Option<String>,
    /// Biweight bandwidth
    #[arg(long, default_value_t = 500.0)]
    pub tau: f64,
    /// Solve every k-th index and interpolate in between
    #[arg(long, default_value_t = 5)]
    pub stride: usize,
    /// Optimizer iteration budget per fit
    #[arg(long, default_value_t = 2000)]
    pub max_iter: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TailArg {
    Lower,
    Upper,
}

#[derive(Debug, Args, Serialize)]
pub struct ChiArgs {
    /// Model parameters `delta_l,delta_u,rho`
    #[arg(long, value_delimiter = ',', value_name = "DELTA_L,DELTA_U,RHO", conflicts_with_all = ["gumbel", "gaussian", "np"])]
    pub model: Option<Vec<f64>>,
    /// Gumbel copula with parameter alpha in (0, 1]
    #[arg(long, conflicts_with_all = ["gaussian", "np"])]
    pub gumbel: Option<f64>,
    /// Gaussian copula with this correlation
    #[arg(long, conflicts_with = "np")]
    pub gaussian: Option<f64>,
    /// Non-parametric moving-window estimates from `--input`
    #[arg(long, requires = "input")]
    pub np: bool,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', value_name = "A,B")]
    pub columns: Option<Vec<String>>,
    /// Threshold grid (parametric) or the single threshold (with --np)
    #[arg(long, value_delimiter = ',')]
    pub t: Option<Vec<f64>>,
    /// Half-width of the moving window
    #[arg(long, default_value_t = 500)]
    pub window: usize,
    #[arg(long, value_enum, default_value = "lower")]
    pub tail: TailArg,
    /// Level of the moving-window envelope
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Monte Carlo draws for asymptotically dependent limits
    #[arg(long, default_value_t = 1_000_000)]
    pub mc_budget: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct StudyArgs {
    /// case1 | case2 | case3 | gumbel-alpha | dynamic
    pub recipe: String,
    #[arg(long, default_value_t = 50)]
    pub replicates: usize,
}

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
    NotConverged(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Data(_) => EXIT_DATA,
            Failure::NotConverged(_) => EXIT_NOT_CONVERGED,
            Failure::Other(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::NotConverged(m) | Failure::Other(m) => m,
        }
    }
}

impl From<asymtail::Error> for Failure {
    fn from(e: asymtail::Error) -> Self {
        use asymtail::Error as E;
        match e {
            E::Domain(_) | E::DivergentMoment { .. } => Failure::Usage(e.to_string()),
            E::Ingestion(_) | E::Parse { .. } | E::Io { .. } | E::Csv(_) | E::Json(_) => Failure::Data(e.to_string()),
            E::Likelihood { .. } | E::Numeric(_) => Failure::Other(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
