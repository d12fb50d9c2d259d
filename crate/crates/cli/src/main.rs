mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use grwlab_core::Error;

/// Maximal spacelike graphs in generalized Robertson-Walker spacetimes.
#[derive(Parser)]
#[command(name = "grwlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an expression, optionally differentiate and evaluate it.
    ParseExpr(ParseExprArgs),
    /// List the builtin models.
    Models(ModelsArgs),
    /// Classify a model against the rigidity, nonexistence and product criteria.
    CheckModel(CheckModelArgs),
    /// Check the geometric identities on a graph by discrete operators.
    Verify(VerifyArgs),
    /// Solve the maximal graph equation with Dirichlet data.
    Solve(SolveArgs),
    /// Stochastic completeness diagnostics for a graph stored in a grid file.
    Completeness(CompletenessArgs),
}

#[derive(Args)]
pub struct ParseExprArgs {
    pub expr: String,
    /// Differentiate this many times.
    #[arg(long, default_value_t = 0)]
    pub diff: usize,
    /// Variable to differentiate in; defaults to the only variable present.
    #[arg(long)]
    pub wrt: Option<String>,
    /// Binding VAR=VALUE for evaluation; repeatable.
    #[arg(long = "at", value_name = "VAR=VALUE")]
    pub at: Vec<String>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args)]
pub struct ModelsArgs {
    /// Print the model file of one builtin instead of the list.
    #[arg(long, value_name = "NAME")]
    pub show: Option<String>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args)]
pub struct CheckModelArgs {
    /// Builtin name or model file.
    #[arg(long)]
    pub model: String,
    /// Scan window a,b inside the interval.
    #[arg(long, allow_hyphen_values = true)]
    pub window: Option<String>,
    #[arg(long, default_value_t = grwlab_core::analysis::DEFAULT_SAMPLES)]
    pub samples: usize,
    #[arg(long, default_value_t = grwlab_core::analysis::DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub model: String,
    /// builtin:{affine:a1,..,an,b | slice:t0 | h2log | catenoid} or a grid file.
    #[arg(long)]
    pub graph: String,
    /// a1,b1,a2,b2,...
    #[arg(long = "box", allow_hyphen_values = true)]
    pub bbox: Option<String>,
    /// n1,n2,...
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub refine: usize,
    /// Comma separated identity ids; all by default.
    #[arg(long)]
    pub ids: Option<String>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub model: String,
    #[arg(long = "box", allow_hyphen_values = true)]
    pub bbox: Option<String>,
    #[arg(long)]
    pub grid: Option<String>,
    /// Boundary data: an expression in x1..xn or a grid file.
    #[arg(long, allow_hyphen_values = true)]
    pub bc: String,
    #[arg(long, default_value_t = 0.9)]
    pub lambda_max: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    /// Write the solution as a grid file.
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args)]
pub struct CompletenessArgs {
    #[arg(long)]
    pub model: String,
    /// Grid file holding the graph.
    #[arg(long)]
    pub graph: String,
    /// Node multi-index i,j of the distance origin.
    #[arg(long)]
    pub origin: String,
    #[arg(long)]
    pub rmax: f64,
    /// Radial comparison function G(r).
    #[arg(long = "G")]
    pub g: Option<String>,
    #[arg(long, default_value_t = 8)]
    pub directions: usize,
    #[arg(long, default_value_t = grwlab_core::analysis::DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(Error::NoConvergence { .. }) => 2,
            CliError::Core(Error::SpacelikeViolation { .. }) => 3,
            CliError::Core(_) | CliError::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::ParseExpr(a) => commands::parse_expr(a),
        Command::Models(a) => commands::models(a),
        Command::CheckModel(a) => commands::check_model(a),
        Command::Verify(a) => commands::verify(a),
        Command::Solve(a) => commands::solve(a),
        Command::Completeness(a) => commands::completeness(a),
    };
    match result {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("grwlab: {e}");
            ExitCode::from(e.code())
        }
    }
}
