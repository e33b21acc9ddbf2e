//! Command-line front end: one subcommand per reproducible result, each
//! emitting a JSON or CSV report.
//!
//! Exit codes: 0 success, 1 validation failure, 2 capacity exceeded,
//! 64 usage error (unknown command or malformed flags).

mod commands;
mod output;
pub mod verify;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ejm_core::measurements::BasisLabel;
use ejm_core::network::TopologyKind;
use ejm_core::{Error, Result};

pub use verify::{verify_all, CheckResult, VerifySummary};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_CAPACITY: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Parser, Debug)]
#[command(
    name = "ejm",
    version,
    about = "Elegant joint measurement networks and their classical models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Numerical tolerance for checks
    #[arg(long, global = true, default_value_t = DEFAULT_TOLERANCE)]
    pub tol: f64,

    /// Seed for every random choice
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BasisChoice {
    Ejm,
    #[value(name = "ejm-z")]
    EjmZ,
    Mp,
    Bsm,
}

impl BasisChoice {
    pub fn label(self) -> BasisLabel {
        match self {
            BasisChoice::Ejm => BasisLabel::Ejm,
            BasisChoice::EjmZ => BasisLabel::EjmZ,
            BasisChoice::Mp => BasisLabel::MassarPopescu,
            BasisChoice::Bsm => BasisLabel::Bsm,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TopologyChoice {
    Line,
    Polygon,
}

impl TopologyChoice {
    pub fn kind(self) -> TopologyKind {
        match self {
            TopologyChoice::Line => TopologyKind::OpenLine,
            TopologyChoice::Polygon => TopologyKind::Polygon,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveChoice {
    #[value(name = "all-equal")]
    AllEqual,
    L1,
    Linf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SearchMode {
    Exhaustive,
    Anneal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TargetChoice {
    /// Full four-outcome quantum distribution
    Fine,
    /// Outcomes merged two by two into binary bins
    Coarse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BellTargetChoice {
    #[value(name = "ejm-line")]
    EjmLine,
    Uniform,
    #[value(name = "pr-box")]
    PrBox,
}

#[derive(Args, Debug, Clone)]
pub struct ChainArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = BasisChoice::Ejm)]
    pub basis: BasisChoice,
    /// all-equal, prefix=K or tuple=a1,a2,...; omit for the full table
    #[arg(long)]
    pub event: Option<String>,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Orthonormality and partial-state diagnostics of a two-qubit basis
    Validate {
        #[arg(long, value_enum, default_value_t = BasisChoice::Ejm)]
        basis: BasisChoice,
        /// JSON basis file to check instead of a built-in basis
        #[arg(long)]
        basis_file: Option<PathBuf>,
    },
    /// Full outcome table of the triangle of singlets
    Triangle {
        #[arg(long, value_enum, default_value_t = BasisChoice::Ejm)]
        basis: BasisChoice,
    },
    /// Open line of N parties with dangling half-singlets at both ends
    Line(ChainArgs),
    /// Ring of N parties
    Polygon(ChainArgs),
    /// All-equal probabilities for lines and polygons, with exact forms
    Table2 {
        #[arg(long, default_value_t = 10)]
        max_n: usize,
    },
    /// Marginals, pair and triple coincidences, coincidence patterns
    Stats {
        #[arg(long, value_enum, default_value_t = TopologyChoice::Polygon)]
        topology: TopologyChoice,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, value_enum, default_value_t = BasisChoice::Ejm)]
        basis: BasisChoice,
    },
    /// Symmetric q-model scan and bit-combination rows
    Qmodel {
        /// LO:HI:STEP grid of bit biases
        #[arg(long, default_value = "0:1:0.1")]
        scan: String,
    },
    /// The asymmetric bit-sharing triangle model
    Asym,
    /// Search deterministic classical models
    Search {
        #[arg(long, value_enum, default_value_t = SearchMode::Exhaustive)]
        mode: SearchMode,
        #[arg(long, default_value_t = 2)]
        cardinality: usize,
        #[arg(long, value_enum, default_value_t = ObjectiveChoice::AllEqual)]
        objective: ObjectiveChoice,
        /// Quantum EJM distribution used by the distance objectives
        #[arg(long, value_enum, default_value_t = TargetChoice::Fine)]
        target: TargetChoice,
        /// Polygon size (annealing only; exhaustive search is triangle-only)
        #[arg(long, default_value_t = 3)]
        n: usize,
        /// Restrict tables to permutations of the four outcomes
        #[arg(long)]
        bijective: bool,
        /// Tune source weights on the 1/64 grid (exhaustive)
        #[arg(long)]
        optimize_weights: bool,
        /// Annealing steps
        #[arg(long, default_value_t = 100_000)]
        steps: u64,
    },
    /// Local-polytope membership for the four-party line as a Bell scenario
    BellCheck {
        #[arg(long, value_enum, default_value_t = BellTargetChoice::EjmLine)]
        target: BellTargetChoice,
        #[arg(long, value_enum, default_value_t = BasisChoice::Ejm)]
        basis: BasisChoice,
    },
    /// Run every check and summarize pass/fail counts
    VerifyAll {
        /// Replace the built-in EJM basis by this JSON basis file
        #[arg(long)]
        basis_file: Option<PathBuf>,
    },
}

/// Everything a run depends on; identical configs give identical output.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub tolerance: f64,
    pub seed: u64,
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            tolerance: DEFAULT_TOLERANCE,
            seed: DEFAULT_SEED,
            format: Format::Json,
            out: None,
        }
    }
}

impl From<Cli> for RunConfig {
    fn from(cli: Cli) -> Self {
        Self {
            command: cli.command,
            tolerance: cli.tol,
            seed: cli.seed,
            format: cli.format,
            out: cli.out,
        }
    }
}

/// Exit status and rendered report of one run.
pub struct RunOutcome {
    pub status: i32,
    pub report: Option<String>,
    pub error: Option<String>,
}

pub fn exit_code(err: &Error) -> i32 {
    if err.is_capacity() {
        EXIT_CAPACITY
    } else {
        EXIT_VALIDATION
    }
}

/// Dispatches a config to its command; the report is rendered but not written.
pub fn run(config: &RunConfig) -> RunOutcome {
    let result = if config.tolerance.is_nan() || config.tolerance <= 0.0 {
        Err(Error::Range(format!(
            "tolerance {} must be positive",
            config.tolerance
        )))
    } else {
        commands::dispatch(config)
    };
    match result {
        Ok(emitted) => RunOutcome {
            status: if emitted.ok { EXIT_OK } else { EXIT_VALIDATION },
            report: Some(match config.format {
                Format::Json => emitted.json,
                Format::Csv => emitted.csv,
            }),
            error: None,
        },
        Err(err) => RunOutcome {
            status: exit_code(&err),
            report: None,
            error: Some(err.to_string()),
        },
    }
}

/// Parses arguments, runs, writes the report to `--out` or `stdout`, and
/// returns the process exit status.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let rendered = err.render().to_string();
            return if err.use_stderr() {
                let _ = write!(stderr, "{rendered}");
                EXIT_USAGE
            } else {
                // --help and --version
                let _ = write!(stdout, "{rendered}");
                EXIT_OK
            };
        }
    };
    let config = RunConfig::from(cli);
    let outcome = run(&config);
    if let Some(report) = &outcome.report {
        let written = match &config.out {
            Some(path) => {
                std::fs::write(path, report).map_err(|e| format!("{}: {e}", path.display()))
            }
            None => stdout
                .write_all(report.as_bytes())
                .map_err(|e| e.to_string()),
        };
        if let Err(e) = written {
            let _ = writeln!(stderr, "error: cannot write report: {e}");
            return EXIT_VALIDATION;
        }
    }
    if let Some(err) = &outcome.error {
        let _ = writeln!(stderr, "error: {err}");
    }
    outcome.status
}

pub(crate) fn io_error(path: &std::path::Path, e: std::io::Error) -> Error {
    Error::Domain(format!("{}: {e}", path.display()))
}

pub(crate) type CmdResult = Result<output::Emitted>;
