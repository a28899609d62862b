//! Command-line front end for `lpopt`.

pub mod commands;
pub mod report;
pub mod settings;

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use lpopt::Error;

use report::{OracleMode, RunReport, Timestamp};
use settings::{FileConfig, Format, Settings, SolverArgs, CONFIG_ENV};

pub const EXIT_PARSE: i32 = 2;
pub const EXIT_INSTANCE: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;
pub const EXIT_NONCONVERGENCE: i32 = 5;
/// Any failure not covered by a more specific code.
pub const EXIT_OTHER: i32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "lpopt",
    version,
    about = "Maximize multilinear forms and homogeneous polynomials over L_p balls"
)]
pub struct Cli {
    /// TOML file with defaults for any solver flag
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Maximize f_A(x) over the unit L_p ball (super-symmetric A)
    SolveHp {
        file: PathBuf,
        #[command(flatten)]
        args: SolverArgs,
    },
    /// Maximize F_A(x1, ..., xd) over products of unit L_p balls
    SolveMl {
        file: PathBuf,
        #[command(flatten)]
        args: SolverArgs,
    },
    /// Lower-bound the p->q norm of a matrix by relaxation and rounding
    Pqnorm {
        file: PathBuf,
        #[command(flatten)]
        args: SolverArgs,
    },
    /// Write sym(A) in the tensor file format
    Symmetrize {
        file: PathBuf,
        /// Output path; standard output when absent
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Brute-force value by vertex enumeration or grid search
    Oracle {
        file: PathBuf,
        #[arg(long, value_enum)]
        mode: OracleMode,
        #[command(flatten)]
        args: SolverArgs,
    },
}

/// Exit code for a failed command.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<Error>() {
        Some(Error::Parse(_) | Error::Shape(_)) => EXIT_PARSE,
        Some(Error::Domain(_) | Error::Degenerate(_) | Error::Invariant(_)) => EXIT_INSTANCE,
        Some(Error::Resource(_)) => EXIT_RESOURCE,
        Some(Error::NonConvergence { .. }) => EXIT_NONCONVERGENCE,
        None => EXIT_OTHER,
    }
}

fn load_config(path: Option<&Path>) -> anyhow::Result<FileConfig> {
    match path {
        Some(p) => FileConfig::load(p),
        None => Ok(FileConfig::default()),
    }
}

fn timed(f: impl FnOnce() -> anyhow::Result<RunReport>) -> anyhow::Result<RunReport> {
    let unix_ms = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0);
    let start = Instant::now();
    let mut r = f()?;
    r.timestamp = Some(Timestamp {
        unix_ms,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    });
    Ok(r)
}

fn render(r: &RunReport) -> String {
    match r.config.format {
        Format::Text => r.to_text(),
        Format::Json => {
            let mut s = r.to_json();
            s.push('\n');
            s
        }
    }
}

/// Runs a parsed command line and returns what goes to standard output.
pub fn run(cli: &Cli) -> anyhow::Result<String> {
    let file = load_config(cli.config.as_deref())?;
    let solve = |args: &SolverArgs, f: &dyn Fn(&Settings) -> anyhow::Result<RunReport>| {
        let s = Settings::resolve(args, &file)?;
        timed(|| f(&s)).map(|r| render(&r))
    };
    match &cli.command {
        Command::SolveHp { file: path, args } => solve(args, &|s| commands::cmd_solve_hp(path, s)),
        Command::SolveMl { file: path, args } => solve(args, &|s| commands::cmd_solve_ml(path, s)),
        Command::Pqnorm { file: path, args } => solve(args, &|s| commands::cmd_pqnorm(path, s)),
        Command::Oracle { file: path, mode, args } => solve(args, &|s| commands::cmd_oracle(path, *mode, s)),
        Command::Symmetrize { file: path, out } => {
            let max_entries = file.max_entries.unwrap_or(lpopt::tensor::DEFAULT_MAX_ENTRIES);
            let mut text = commands::cmd_symmetrize(path, max_entries)?;
            text.push('\n');
            match out {
                Some(o) => {
                    std::fs::write(o, &text)?;
                    Ok(String::new())
                }
                None => Ok(text),
            }
        }
    }
}
