use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::DEFAULT_MAX_ENTRIES;

/// How unit Gram directions are turned into signs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RoundingStrategy {
    /// Sign of the projection onto one shared Gaussian vector.
    Hyperplane,
    /// Krivine's transform `⟨u, v⟩ ↦ sin(c⟨u, v⟩)` before hyperplane rounding.
    #[default]
    Krivine,
}

impl std::str::FromStr for RoundingStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hyperplane" => Ok(RoundingStrategy::Hyperplane),
            "krivine" => Ok(RoundingStrategy::Krivine),
            other => Err(Error::Parse(format!("unknown rounding strategy {other:?}"))),
        }
    }
}

impl std::fmt::Display for RoundingStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RoundingStrategy::Hyperplane => "hyperplane",
            RoundingStrategy::Krivine => "krivine",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Relative accuracy for the relaxation solver.
    pub tol: f64,
    /// Iteration cap for the relaxation solver.
    pub max_iter: usize,
    /// Rounding trials per relaxation solve.
    pub trials: usize,
    /// Cap on slot-1 candidates drawn per recursion level.
    pub max_samples: usize,
    /// Use the doubled sample count of the recursive analysis.
    pub amplified: bool,
    pub strategy: RoundingStrategy,
    pub seed: u64,
    /// Worker threads for candidate evaluation; results do not depend on it.
    pub threads: usize,
    /// Cap on dense tensor entries.
    pub max_entries: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-6,
            max_iter: 5000,
            trials: 100,
            max_samples: 256,
            amplified: true,
            strategy: RoundingStrategy::Krivine,
            seed: 0,
            threads: 1,
            max_entries: DEFAULT_MAX_ENTRIES,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::domain(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 || self.trials == 0 || self.max_samples == 0 {
            return Err(Error::domain("max_iter, trials and max_samples must be >= 1"));
        }
        Ok(())
    }
}
