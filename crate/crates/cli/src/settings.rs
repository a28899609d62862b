//! Flag, config-file and default resolution.

use std::path::Path;

use clap::{Args, ValueEnum};
use lpopt::{Error, Exponent, RoundingStrategy, SolverConfig};
use serde::{Deserialize, Serialize};

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "LPOPT_CONFIG";
/// Default angular grid resolution for oracles.
pub const DEFAULT_STEPS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Hyperplane,
    Krivine,
}

impl From<StrategyArg> for RoundingStrategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Hyperplane => RoundingStrategy::Hyperplane,
            StrategyArg::Krivine => RoundingStrategy::Krivine,
        }
    }
}

/// Solver flags shared by every command. Unset flags fall back to the
/// config file, then to the defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct SolverArgs {
    /// Exponent in (2, inf]: "inf", an integer, "a/b" or a decimal
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Rounding trials per relaxation solve
    #[arg(long)]
    pub trials: Option<usize>,
    /// Relative duality gap for the relaxation
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Angular grid resolution for oracles
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyArg>,
    /// Cap on slot-1 candidates per recursion level
    #[arg(long)]
    pub max_samples: Option<usize>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Compare the result against a brute-force oracle
    #[arg(long)]
    pub oracle: bool,
}

/// Contents of a TOML config file; every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub p: Option<String>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub steps: Option<usize>,
    pub strategy: Option<RoundingStrategy>,
    pub max_samples: Option<usize>,
    pub threads: Option<usize>,
    pub format: Option<Format>,
    pub oracle: Option<bool>,
    pub amplified: Option<bool>,
    pub max_entries: Option<usize>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, Error> {
        toml::from_str(text).map_err(|e| Error::Parse(format!("config file: {e}")))
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("reading config {}: {e}", path.display())))?;
        Ok(Self::parse(&text)?)
    }
}

/// Fully resolved settings, echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub p: Exponent,
    pub solver: SolverConfig,
    pub steps: usize,
    pub format: Format,
    pub oracle: bool,
}

impl Settings {
    pub fn resolve(args: &SolverArgs, file: &FileConfig) -> Result<Self, Error> {
        let defaults = SolverConfig::default();
        let p = match args.p.as_ref().or(file.p.as_ref()) {
            Some(s) => s.parse::<Exponent>()?,
            None => Exponent::infinity(),
        };
        let solver = SolverConfig {
            tol: args.tol.or(file.tol).unwrap_or(defaults.tol),
            max_iter: args.max_iter.or(file.max_iter).unwrap_or(defaults.max_iter),
            trials: args.trials.or(file.trials).unwrap_or(defaults.trials),
            max_samples: args.max_samples.or(file.max_samples).unwrap_or(defaults.max_samples),
            amplified: file.amplified.unwrap_or(defaults.amplified),
            strategy: args
                .strategy
                .map(RoundingStrategy::from)
                .or(file.strategy)
                .unwrap_or(defaults.strategy),
            seed: args.seed.or(file.seed).unwrap_or(defaults.seed),
            threads: args.threads.or(file.threads).unwrap_or(defaults.threads).max(1),
            max_entries: file.max_entries.unwrap_or(defaults.max_entries),
        };
        solver.validate()?;
        let steps = args.steps.or(file.steps).unwrap_or(DEFAULT_STEPS);
        if steps == 0 {
            return Err(Error::Domain("steps must be >= 1".into()));
        }
        Ok(Settings {
            p,
            solver,
            steps,
            format: args.format.or(file.format).unwrap_or_default(),
            oracle: args.oracle || file.oracle.unwrap_or(false),
        })
    }
}
