//! Argument handling, dispatch and report generation for the `polymellin` binary.

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
pub mod parse;
pub mod report;

pub use commands::{execute, run};
pub use report::ReportDocument;

/// Exit status for a computational failure; the report is still written.
pub const EXIT_COMPUTE: i32 = 1;
/// Exit status for malformed or inconsistent flags.
pub const EXIT_USAGE: i32 = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct Floats(pub Vec<f64>);

#[derive(Clone, Debug, PartialEq)]
pub struct Ints(pub Vec<i64>);

#[derive(Clone, Debug, PartialEq)]
pub struct UInts(pub Vec<u32>);

#[derive(Clone, Debug, PartialEq)]
pub struct FloatRows(pub Vec<Vec<f64>>);

#[derive(Clone, Debug, PartialEq)]
pub struct IntRows(pub Vec<Vec<i64>>);

fn floats(t: &str) -> Result<Floats, String> {
    parse::float_list(t).map(Floats)
}

fn angles(t: &str) -> Result<Floats, String> {
    parse::angle_list(t).map(Floats)
}

fn ints(t: &str) -> Result<Ints, String> {
    parse::int_list(t).map(Ints)
}

fn uints(t: &str) -> Result<UInts, String> {
    parse::uint_list(t).map(UInts)
}

fn float_rows(t: &str) -> Result<FloatRows, String> {
    parse::float_matrix(t).map(FloatRows)
}

fn int_rows(t: &str) -> Result<IntRows, String> {
    parse::int_matrix(t).map(IntRows)
}

#[derive(Parser, Clone, Debug)]
#[command(name = "polymellin", version, about = "Mellin transforms of rational functions with Laurent polynomial denominators")]
struct Cli {
    /// Write the JSON report here instead of stdout.
    #[arg(short = 'o', long = "output", global = true)]
    output: Option<PathBuf>,
    /// Worker thread cap for quadrature.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print the human-readable rendering instead of JSON.
    #[arg(long, global = true)]
    text: bool,
    /// Record the wall-clock time in the report.
    #[arg(long, global = true)]
    timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug, PartialEq)]
pub struct InputArg {
    /// Polynomial JSON file.
    #[arg(short = 'f', long = "input")]
    pub input: PathBuf,
}

#[derive(Args, Clone, Debug, PartialEq)]
pub struct PointArgs {
    /// Imaginary parts of s (default 0).
    #[arg(long, value_parser = floats, allow_hyphen_values = true)]
    pub t: Option<Floats>,
    /// Argument direction θ; accepts `pi/3` style literals (default 0).
    #[arg(long, value_parser = angles, allow_hyphen_values = true)]
    pub theta: Option<Floats>,
}

#[derive(Args, Clone, Debug, PartialEq)]
pub struct QuadArgs {
    /// Relative tolerance of the trapezoid refinement.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Truncation radius of the x-integral, one value or one per axis.
    #[arg(long, value_parser = floats)]
    pub radius: Option<Floats>,
    /// Initial step of the x-grid.
    #[arg(long)]
    pub max_step: Option<f64>,
    #[arg(long)]
    pub max_refine: Option<usize>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum OracleCase {
    /// `1/(c_0 + Σ c_k z_k)`, coefficients from --coeffs (default all ones).
    Example1,
    /// `∏_k 1/(1 + ⟨a_k, z⟩)` with rows a_k from --factors.
    Prop41,
    /// `1 + Σ z^{α_k}` with exponent rows from --alphas.
    Prop42,
    /// `1 + z^d` with d from --degree.
    Binomial,
    /// Residue formula for the univariate polynomial in -f.
    Psi,
    /// `a_1 + a_2 z_1 + a_3 z_2 + a_4 z_1 z_2` with --coeffs a_1..a_4.
    Example3,
}

impl OracleCase {
    pub fn as_str(&self) -> &'static str {
        match self {
            OracleCase::Example1 => "example1",
            OracleCase::Prop41 => "prop41",
            OracleCase::Prop42 => "prop42",
            OracleCase::Binomial => "binomial",
            OracleCase::Psi => "psi",
            OracleCase::Example3 => "example3",
        }
    }
}

#[derive(Subcommand, Clone, Debug, PartialEq)]
pub enum Command {
    /// Facets, vertices and faces of the Newton polytope.
    Polytope {
        #[command(flatten)]
        input: InputArg,
    },
    /// Mellin transform of g/f^power by quadrature (g = 1).
    Eval {
        #[command(flatten)]
        input: InputArg,
        /// Real parts of s.
        #[arg(long, value_parser = floats, allow_hyphen_values = true)]
        s: Floats,
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, default_value_t = 1)]
        power: u32,
        #[command(flatten)]
        quad: QuadArgs,
    },
    /// Integration-by-parts continuation; with --s and no --m the entire factor Φ.
    Continue {
        #[command(flatten)]
        input: InputArg,
        /// Number of steps per facet, in facet order.
        #[arg(long, value_parser = uints)]
        m: Option<UInts>,
        #[arg(long, value_parser = floats, allow_hyphen_values = true)]
        s: Option<Floats>,
        #[command(flatten)]
        point: PointArgs,
        #[command(flatten)]
        quad: QuadArgs,
    },
    /// Facial coamoeba closure cloud, optional clearance and non-vanishing check at --theta.
    Coamoeba {
        #[command(flatten)]
        input: InputArg,
        /// Fiber grid points per axis.
        #[arg(long, default_value_t = 400)]
        grid: usize,
        /// Log-modulus range of the fiber grid.
        #[arg(long, default_value_t = 8.0)]
        radius: f64,
        /// Pass threshold of the non-vanishing check.
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
        #[arg(long, value_parser = angles, allow_hyphen_values = true)]
        theta: Option<Floats>,
        /// CSV file for the cloud.
        #[arg(long, alias = "csv")]
        out: Option<PathBuf>,
    },
    /// Integer kernel of the A-matrix and GKZ residuals at s.
    Gkz {
        #[command(flatten)]
        input: InputArg,
        #[arg(long, value_parser = floats, allow_hyphen_values = true)]
        s: Floats,
        #[command(flatten)]
        point: PointArgs,
        #[command(flatten)]
        quad: QuadArgs,
    },
    /// Closed-form value against quadrature.
    Oracle {
        #[arg(long = "case", value_enum)]
        case: OracleCase,
        #[arg(short = 'f', long = "input")]
        input: Option<PathBuf>,
        #[arg(long, value_parser = floats, allow_hyphen_values = true)]
        s: Floats,
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, value_parser = floats, allow_hyphen_values = true)]
        coeffs: Option<Floats>,
        /// Linear factors `a_1;a_2;...`, each `1 + ⟨a_k, z⟩`.
        #[arg(long, value_parser = float_rows, allow_hyphen_values = true)]
        factors: Option<FloatRows>,
        /// Exponent rows `α_1;α_2;...`.
        #[arg(long, value_parser = int_rows, allow_hyphen_values = true)]
        alphas: Option<IntRows>,
        #[arg(long)]
        degree: Option<u32>,
        #[command(flatten)]
        quad: QuadArgs,
    },
    /// Inverse Mellin transform of M_{1/f} at positive points z.
    Invert {
        #[command(flatten)]
        input: InputArg,
        /// Real part of the Bromwich contour.
        #[arg(long, value_parser = floats, allow_hyphen_values = true)]
        sigma: Floats,
        /// Evaluation points, `z_1,z_2;z_1,z_2;...`, positive reals.
        #[arg(long, value_parser = float_rows)]
        z: FloatRows,
        #[arg(long, value_parser = angles, allow_hyphen_values = true)]
        theta: Option<Floats>,
        #[command(flatten)]
        quad: QuadArgs,
    },
    /// Laurent coefficient of 1/f at exponent α in the component containing x.
    Laurent {
        #[command(flatten)]
        input: InputArg,
        #[arg(long, value_parser = ints, allow_hyphen_values = true)]
        alpha: Ints,
        #[arg(long, value_parser = floats, allow_hyphen_values = true)]
        x: Floats,
        #[command(flatten)]
        quad: QuadArgs,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Polytope { .. } => "polytope",
            Command::Eval { .. } => "eval",
            Command::Continue { .. } => "continue",
            Command::Coamoeba { .. } => "coamoeba",
            Command::Gkz { .. } => "gkz",
            Command::Oracle { .. } => "oracle",
            Command::Invert { .. } => "invert",
            Command::Laurent { .. } => "laurent",
        }
    }
}

/// A validated invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct CommandSpec {
    pub command: Command,
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
    pub text: bool,
    pub timestamp: bool,
    /// Arguments after the program name, recorded in the report.
    pub argv: Vec<String>,
}

#[derive(Debug)]
pub enum UsageError {
    /// Rejected by the argument parser, including `--help` and `--version`.
    Clap(clap::Error),
    Invalid { flag: String, message: String },
}

impl UsageError {
    fn invalid(flag: &str, message: impl Into<String>) -> Self {
        UsageError::Invalid {
            flag: flag.to_string(),
            message: message.into(),
        }
    }

    /// The flag at fault, when known.
    pub fn flag(&self) -> Option<String> {
        match self {
            UsageError::Clap(e) => e.get(clap::error::ContextKind::InvalidArg).map(|v| v.to_string()),
            UsageError::Invalid { flag, .. } => Some(flag.clone()),
        }
    }
}

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UsageError::Clap(e) => write!(f, "{e}"),
            UsageError::Invalid { flag, message } => write!(f, "error: invalid value for '{flag}': {message}"),
        }
    }
}

impl std::error::Error for UsageError {}

/// Parses arguments that follow the program name.
pub fn parse_command<S: AsRef<str>>(argv: &[S]) -> Result<CommandSpec, UsageError> {
    let argv: Vec<String> = argv.iter().map(|a| a.as_ref().to_string()).collect();
    let cli = Cli::try_parse_from(std::iter::once("polymellin".to_string()).chain(argv.iter().cloned()))
        .map_err(UsageError::Clap)?;
    if cli.threads == Some(0) {
        return Err(UsageError::invalid("--threads", "must be at least 1"));
    }
    validate(&cli.command)?;
    Ok(CommandSpec {
        command: cli.command,
        output: cli.output,
        threads: cli.threads,
        text: cli.text,
        timestamp: cli.timestamp,
        argv,
    })
}

fn same_len(flag: &str, v: &Option<Floats>, n: usize) -> Result<(), UsageError> {
    match v {
        Some(x) if x.0.len() != n => Err(UsageError::invalid(
            flag,
            format!("has {} entries, expected {n}", x.0.len()),
        )),
        _ => Ok(()),
    }
}

fn check_point(s: &Floats, point: &PointArgs) -> Result<(), UsageError> {
    let n = s.0.len();
    same_len("--t", &point.t, n)?;
    same_len("--theta", &point.theta, n)
}

fn check_quad(q: &QuadArgs) -> Result<(), UsageError> {
    if let Some(tol) = q.tol {
        if !(tol > 0.0) {
            return Err(UsageError::invalid("--tol", "must be positive"));
        }
    }
    if let Some(h) = q.max_step {
        if !(h > 0.0) {
            return Err(UsageError::invalid("--max-step", "must be positive"));
        }
    }
    if let Some(r) = &q.radius {
        if r.0.iter().any(|&v| !(v > 0.0)) {
            return Err(UsageError::invalid("--radius", "entries must be positive"));
        }
    }
    Ok(())
}

fn validate(cmd: &Command) -> Result<(), UsageError> {
    match cmd {
        Command::Polytope { .. } => Ok(()),
        Command::Eval { s, point, power, quad, .. } => {
            if *power == 0 {
                return Err(UsageError::invalid("--power", "must be at least 1"));
            }
            check_point(s, point)?;
            check_quad(quad)
        }
        Command::Gkz { s, point, quad, .. } => {
            check_point(s, point)?;
            check_quad(quad)
        }
        Command::Continue { m, s, point, quad, .. } => {
            if m.is_none() && s.is_none() {
                return Err(UsageError::invalid("--m", "give --m, --s or both"));
            }
            match s {
                Some(s) => check_point(s, point)?,
                None if point.t.is_some() || point.theta.is_some() => {
                    return Err(UsageError::invalid("--s", "required with --t or --theta"));
                }
                None => {}
            }
            check_quad(quad)
        }
        Command::Coamoeba { grid, radius, epsilon, .. } => {
            if *grid < 2 {
                return Err(UsageError::invalid("--grid", "must be at least 2"));
            }
            if !(*radius > 0.0) {
                return Err(UsageError::invalid("--radius", "must be positive"));
            }
            if !(*epsilon > 0.0) {
                return Err(UsageError::invalid("--epsilon", "must be positive"));
            }
            Ok(())
        }
        Command::Oracle {
            case,
            input,
            s,
            point,
            coeffs,
            factors,
            alphas,
            degree,
            quad,
        } => {
            check_point(s, point)?;
            check_quad(quad)?;
            let n = s.0.len();
            match case {
                OracleCase::Example1 => same_len("--coeffs", coeffs, n + 1),
                OracleCase::Prop41 => match factors {
                    None => Err(UsageError::invalid("--factors", "required for --case prop41")),
                    Some(rows) if rows.0.iter().any(|r| r.len() != n) => Err(UsageError::invalid(
                        "--factors",
                        format!("each factor needs {n} coefficients"),
                    )),
                    Some(_) => Ok(()),
                },
                OracleCase::Prop42 => match alphas {
                    None => Err(UsageError::invalid("--alphas", "required for --case prop42")),
                    Some(rows) if rows.0.len() != n || rows.0.iter().any(|r| r.len() != n) => Err(
                        UsageError::invalid("--alphas", format!("need {n} rows of length {n}")),
                    ),
                    Some(_) => Ok(()),
                },
                OracleCase::Binomial => {
                    if n != 1 {
                        return Err(UsageError::invalid("--s", "binomial case is univariate"));
                    }
                    match degree {
                        None => Err(UsageError::invalid("--degree", "required for --case binomial")),
                        Some(0) => Err(UsageError::invalid("--degree", "must be at least 1")),
                        Some(_) => Ok(()),
                    }
                }
                OracleCase::Psi => {
                    if n != 1 {
                        return Err(UsageError::invalid("--s", "psi case is univariate"));
                    }
                    if input.is_none() {
                        return Err(UsageError::invalid("--input", "required for --case psi"));
                    }
                    Ok(())
                }
                OracleCase::Example3 => {
                    if n != 2 {
                        return Err(UsageError::invalid("--s", "example3 needs two entries"));
                    }
                    match coeffs {
                        Some(c) if c.0.len() == 4 => Ok(()),
                        _ => Err(UsageError::invalid("--coeffs", "example3 needs a_1,a_2,a_3,a_4")),
                    }
                }
            }
        }
        Command::Invert { sigma, z, theta, quad, .. } => {
            let n = sigma.0.len();
            same_len("--theta", theta, n)?;
            for row in &z.0 {
                if row.len() != n {
                    return Err(UsageError::invalid("--z", format!("each point needs {n} entries")));
                }
                if row.iter().any(|&v| !(v > 0.0)) {
                    return Err(UsageError::invalid("--z", "entries must be positive"));
                }
            }
            check_quad(quad)
        }
        Command::Laurent { alpha, x, quad, .. } => {
            if alpha.0.len() != x.0.len() {
                return Err(UsageError::invalid("--x", "length differs from --alpha"));
            }
            check_quad(quad)
        }
    }
}
