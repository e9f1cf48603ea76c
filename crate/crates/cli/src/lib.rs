//! Command-line front end: validation, property checks, core decisions,
//! the two counterexample certifications and the weak-core finder.
//!
//! Exit codes: 0 success or member, 1 invalid input, 2 I/O failure,
//! 3 non-member, 4 solver or certification failure.

pub mod commands;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use commands::Outcome;
pub use report::{Format, RunReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    Invalid = 1,
    Io = 2,
    NonMember = 3,
    Failure = 4,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Parser)]
#[command(name = "fhm", version, about = "Exact analysis of housing markets with fractional endowments")]
pub struct Cli {
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Append wall-clock timings; reports are then no longer reproducible.
    #[arg(long, global = true)]
    pub timings: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Property {
    Ir,
    Ete,
    Eene,
    Sdeff,
    Envy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Notion {
    Strong,
    Weak,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Statement {
    /// The strong core of the bundled economy is empty.
    Statement1,
    /// No weak-core allocation of the bundled economy satisfies EENE.
    Statement3,
}

#[derive(Debug, Args)]
pub struct FindCoreArgs {
    #[arg(long)]
    pub economy: PathBuf,
    /// Number of halvings `2^-1 .. 2^-K` in the relaxation schedule.
    #[arg(long, default_value_t = 20)]
    pub schedule: usize,
    /// First rounding denominator; doubled on retries up to 4096.
    #[arg(long, default_value_t = 64)]
    pub maxden: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Utility file: `n` lines of `n` positive rationals.
    #[arg(long)]
    pub utilities: Option<PathBuf>,
    /// Where to write the verified allocation.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate an economy file.
    Validate {
        #[arg(long)]
        economy: PathBuf,
    },
    /// Evaluate fairness and efficiency properties of an allocation.
    Check {
        #[arg(long)]
        economy: PathBuf,
        #[arg(long)]
        allocation: PathBuf,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Property::Ir, Property::Ete, Property::Eene, Property::Sdeff, Property::Envy])]
        properties: Vec<Property>,
    },
    /// Decide strong- or weak-core membership with a blocking certificate.
    Core {
        #[arg(long)]
        economy: PathBuf,
        #[arg(long)]
        allocation: PathBuf,
        #[arg(long, value_enum, default_value_t = Notion::Weak)]
        notion: Notion,
        /// Largest coalition searched; defaults to all agents.
        #[arg(long)]
        max_size: Option<usize>,
    },
    /// Run a bundled certification script.
    Reproduce {
        #[arg(value_enum)]
        statement: Statement,
        /// Economy to run the script on instead of the bundled one.
        #[arg(long)]
        economy: Option<PathBuf>,
    },
    /// Compute and verify a weak-core allocation with equal treatment of equals.
    FindCore(FindCoreArgs),
}

/// Parses arguments and runs the command. Usage errors come back as
/// `Err` with clap's rendered message and exit code.
pub fn run<I, T>(args: I) -> Result<(String, Exit), clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    let out = commands::execute(&cli.command, cli.timings);
    Ok((out.report.render(cli.format), out.exit))
}
