//! Command-line front end for `collision-lab`.
//!
//! Every invocation is turned into an [`AnalysisRequest`], executed, and written
//! as a JSON report or a CSV table. Both embed the request so a run can be
//! repeated with `collision-lab replay <report>`.

mod commands;
pub mod output;
pub mod request;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand};
use collision_lab::Mode;

pub use output::Outcome;
pub use request::{AnalysisRequest, Battery, Command, ConfigSource, Format, MultinomialSpec};

/// Exit status for a verification that found violations.
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or a request that fails validation.
    Invalid(String),
    /// An input file could not be read or parsed.
    Input { path: PathBuf, message: String },
    /// Raised by the library.
    Core(collision_lab::Error),
    /// The report could not be written.
    Output(String),
}

impl From<collision_lab::Error> for CliError {
    fn from(e: collision_lab::Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Invalid(m) => write!(f, "invalid request: {m}"),
            CliError::Input { path, message } => write!(f, "cannot use input file {}: {message}", path.display()),
            CliError::Core(e) if e.is_validation() => write!(f, "invalid request: {e}"),
            CliError::Core(e) => write!(f, "computation failed: {e}"),
            CliError::Output(m) => write!(f, "cannot write report: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) | CliError::Input { .. } => EXIT_INVALID,
            CliError::Core(e) if e.is_validation() => EXIT_INVALID,
            CliError::Core(_) | CliError::Output(_) => EXIT_NUMERIC,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "collision-lab", version, about = "Waiting times for r-fold collisions in finite functions")]
pub struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Survival function P(T > k) for k = 0..=k-max.
    Dist(AnalysisArgs),
    /// Expected waiting times.
    Expect(AnalysisArgs),
    /// Lower and upper bounds on the expectations.
    Bounds(AnalysisArgs),
    /// Limit regime, time scales and limit law against the exact survival.
    Limits(AnalysisArgs),
    /// Monte Carlo waiting times; two-stage when the configuration is multinomial.
    Simulate(AnalysisArgs),
    /// Balance measures and random-mapping moments.
    Measures(AnalysisArgs),
    /// Cross-check the exact, enumerated and bound computations on a battery.
    Verify(VerifyArgs),
    /// Rerun the request embedded in a report (or a bare request document).
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["sizes", "classical", "config", "multinomial_n"])))]
struct AnalysisArgs {
    /// Preimage sizes, e.g. 2,2,1.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    /// m cells holding one ball each.
    #[arg(long, value_name = "M")]
    classical: Option<usize>,
    /// JSON file with {"sizes":[..]}, {"classical":m} or {"multinomial":{"n":N,"p":[..]}}.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Number of points of a multinomial model; use with --p.
    #[arg(long = "multinomial-n", value_name = "N", requires = "p")]
    multinomial_n: Option<usize>,
    /// Cell probabilities, e.g. 1/2,1/4,1/4 (separate with ';' when using decimal commas).
    #[arg(long, requires = "multinomial_n")]
    p: Option<String>,
    #[arg(long, default_value_t = 2)]
    r: usize,
    /// K1, K2 or R; repeat or comma-separate. Defaults to every mode that applies.
    #[arg(long = "mode", value_delimiter = ',', value_parser = parse_mode)]
    modes: Vec<Mode>,
    #[arg(long)]
    k_max: Option<usize>,
    /// start:step:end for limits.
    #[arg(long, value_name = "START:STEP:END")]
    t_grid: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Quadrature and series tolerance.
    #[arg(long)]
    tol: Option<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write the report here instead of standard output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "small")]
    battery: Battery,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    /// A JSON report, the first line of a CSV report, or a bare request.
    file: PathBuf,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse::<Mode>().map_err(|e| e.to_string())
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input { path: path.to_path_buf(), message: e.to_string() })
}

fn parse_tol(s: Option<&str>, req: &mut AnalysisRequest) -> Result<(), CliError> {
    if let Some(s) = s {
        req.tol = request::parse_decimal(s)?;
    }
    Ok(())
}

fn analysis_request(command: Command, a: AnalysisArgs) -> Result<(AnalysisRequest, Option<PathBuf>), CliError> {
    let mut req = AnalysisRequest::new(command);
    req.config = Some(if let Some(s) = a.sizes {
        ConfigSource::Sizes(s)
    } else if let Some(m) = a.classical {
        ConfigSource::Classical(m)
    } else if let Some(n) = a.multinomial_n {
        let p = request::split_list(a.p.as_deref().unwrap_or(""));
        ConfigSource::Multinomial(MultinomialSpec { n, p })
    } else {
        let path = a.config.expect("clap enforces one source");
        let text = read_file(&path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Input { path, message: e.to_string() })?
    });
    req.r = a.r;
    req.modes = a.modes;
    req.k_max = a.k_max;
    req.t_grid = a.t_grid.as_deref().map(request::parse_grid).transpose()?;
    req.trials = a.trials;
    req.seed = a.seed;
    parse_tol(a.tol.as_deref(), &mut req)?;
    req.format = a.format.unwrap_or(match command {
        Command::Dist | Command::Limits => Format::Csv,
        _ => Format::Json,
    });
    Ok((req.with_default_modes()?, a.out))
}

/// Extracts the request from a report or a bare request document.
pub fn request_from_document(text: &str) -> Result<AnalysisRequest, String> {
    let text = text.lines().next().filter(|l| l.starts_with('#')).map_or(text, |l| l[1..].trim());
    let mut doc: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let inner = match doc.get_mut("request") {
        Some(r) => r.take(),
        None => doc,
    };
    serde_json::from_value(inner).map_err(|e| e.to_string())
}

/// Parses the arguments into a request and an optional output path.
pub fn parse_args<I, T>(args: I) -> Result<(AnalysisRequest, Option<PathBuf>), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Invalid(e.to_string()))?;
    match cli.command {
        Sub::Dist(a) => analysis_request(Command::Dist, a),
        Sub::Expect(a) => analysis_request(Command::Expect, a),
        Sub::Bounds(a) => analysis_request(Command::Bounds, a),
        Sub::Limits(a) => analysis_request(Command::Limits, a),
        Sub::Simulate(a) => analysis_request(Command::Simulate, a),
        Sub::Measures(a) => analysis_request(Command::Measures, a),
        Sub::Verify(v) => {
            let mut req = AnalysisRequest::new(Command::Verify);
            req.battery = Some(v.battery);
            req.format = v.format;
            parse_tol(v.tol.as_deref(), &mut req)?;
            Ok((req, v.out))
        }
        Sub::Replay(r) => {
            let text = read_file(&r.file)?;
            let req =
                request_from_document(&text).map_err(|message| CliError::Input { path: r.file.clone(), message })?;
            Ok((req.with_default_modes()?, r.out))
        }
    }
}

/// Runs a request and renders the report.
pub fn run(request: &AnalysisRequest) -> Result<(String, Outcome), CliError> {
    let outcome = commands::execute(request)?;
    Ok((output::render(request, &outcome), outcome))
}

/// Full command-line behaviour; returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    // Help and version requests are not errors.
    if let Err(e) = Cli::try_parse_from(&args) {
        if !e.use_stderr() {
            print!("{e}");
            return 0;
        }
        eprint!("{e}");
        return EXIT_INVALID;
    }
    let result = parse_args(&args).and_then(|(req, out)| {
        let (text, outcome) = run(&req)?;
        match out {
            Some(path) => fs::write(&path, &text).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?,
            None => print!("{text}"),
        }
        Ok(outcome.passed)
    });
    match result {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("error: verification found violations");
            EXIT_VERIFY_FAILED
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
