//! `markov-copula`: validate, audit, build and simulate Markov chain models.
//!
//! Exit codes: 0 when every requested check passes, 1 when a check fails
//! with a certificate or violation, 2 on operational errors.

mod error;
mod model;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "markov-copula", version, about = "Markov copulae for finite continuous-time Markov chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check that a model's generator has nonnegative off-diagonals and zero row sums.
    Validate {
        model: PathBuf,
        /// Probe times, comma separated. Defaults to a log-spaced grid.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        timing: bool,
    },
    /// Audit the components of a joint chain for strong and weak consistency.
    Check {
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Both)]
        mode: Mode,
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        /// History depth of the weak-consistency event search (1 to 3).
        #[arg(long, default_value_t = 2)]
        depth: usize,
        /// Factor to audit, 1-based, or `all`.
        #[arg(long, default_value = "all")]
        factor: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        timing: bool,
    },
    /// Build a joint generator whose components follow the given marginal models.
    Build {
        /// Single-factor marginal models, in factor order.
        #[arg(required = true, num_args = 2..)]
        marginals: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = ObjectiveArg::Independent)]
        objective: ObjectiveArg,
        /// Weight for `maximize-weighted`, as FROM:TO=W on flat joint states. Repeatable.
        #[arg(long = "weight")]
        weights: Vec<String>,
        /// Solve times for time-dependent marginals. Defaults to a log-spaced grid.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        /// Write the joint model here.
        #[arg(long)]
        model_out: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        timing: bool,
    },
    /// Simulate paths and run the compensator residual test or the empirical law check.
    Simulate {
        model: PathBuf,
        /// Horizon.
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 100_000)]
        paths: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = SimReport::Stats)]
        report: SimReport,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        timing: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Strong,
    Weak,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Independent,
    MaximizeCommonJumps,
    MinimizeCommonJumps,
    MaximizeWeighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SimReport {
    Stats,
    Empirical,
    Both,
}

/// Caps the worker pool from `MARKOV_COPULA_THREADS` (0 or unset = automatic).
fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("MARKOV_COPULA_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("MARKOV_COPULA_THREADS must be a nonnegative integer, got `{raw}`")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot configure worker threads: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli, argv: Vec<String>) -> Result<bool, CliError> {
    let ctx = |timing: bool, out: Option<PathBuf>| report::Context::new(argv.clone(), timing, out);
    match cli.command {
        Command::Validate { model, grid, out, timing } => report::validate(&ctx(timing, out), &model, grid),
        Command::Check { model, mode, grid, depth, factor, out, timing } => {
            let mode = match mode {
                Mode::Strong => markov_copula::AuditMode::Strong,
                Mode::Weak => markov_copula::AuditMode::Weak,
                Mode::Both => markov_copula::AuditMode::Both,
            };
            report::check(&ctx(timing, out), &model, mode, grid, depth, &factor)
        }
        Command::Build { marginals, objective, weights, grid, model_out, out, timing } => {
            let objective = parse_objective(objective, &weights)?;
            let paths: Vec<&Path> = marginals.iter().map(PathBuf::as_path).collect();
            report::build(&ctx(timing, out), &paths, objective, grid, model_out.as_deref())
        }
        Command::Simulate { model, t, paths, seed, report: which, out, timing } => {
            let stats = matches!(which, SimReport::Stats | SimReport::Both);
            let empirical = matches!(which, SimReport::Empirical | SimReport::Both);
            report::simulate(&ctx(timing, out), &model, t, paths, seed, stats, empirical)
        }
    }
}

fn parse_objective(objective: ObjectiveArg, weights: &[String]) -> Result<markov_copula::Objective, CliError> {
    use markov_copula::Objective;
    if !weights.is_empty() && !matches!(objective, ObjectiveArg::MaximizeWeighted) {
        return Err(CliError::Usage("--weight only applies to --objective maximize-weighted".into()));
    }
    Ok(match objective {
        ObjectiveArg::Independent => Objective::Independent,
        ObjectiveArg::MaximizeCommonJumps => Objective::MaximizeCommonJumps,
        ObjectiveArg::MinimizeCommonJumps => Objective::MinimizeCommonJumps,
        ObjectiveArg::MaximizeWeighted => {
            let mut map = std::collections::BTreeMap::new();
            for w in weights {
                let bad = || CliError::Usage(format!("weight `{w}` is not of the form FROM:TO=W"));
                let (pair, value) = w.split_once('=').ok_or_else(bad)?;
                let (from, to) = pair.split_once(':').ok_or_else(bad)?;
                let key = (from.trim().parse().map_err(|_| bad())?, to.trim().parse().map_err(|_| bad())?);
                map.insert(key, value.trim().parse().map_err(|_| bad())?);
            }
            if map.is_empty() {
                return Err(CliError::Usage("maximize-weighted needs at least one --weight".into()));
            }
            Objective::MaximizeWeighted(map)
        }
    })
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = configure_threads().and_then(|_| run(cli, argv));
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
