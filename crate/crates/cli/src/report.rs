//! Run reports and their text rendering.

use std::fmt::Write as _;

use lpopt::oracle::OracleResult;
use lpopt::{Exponent, HpCertificate, MlCertificate, OracleMethod};
use serde::{Deserialize, Serialize};

use crate::settings::Settings;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub dims: Vec<usize>,
    pub order: usize,
    pub p: Exponent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PqNormOutcome {
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    /// `yᵀBz` of the best rounded pair.
    pub value: f64,
    /// Value of the Gram relaxation the pair was rounded from.
    pub relaxation: f64,
    /// `relaxation / value`, at most the Grothendieck bound in expectation.
    pub gap_ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OracleMode {
    Ml,
    Hp,
    Pqnorm,
}

impl std::fmt::Display for OracleMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OracleMode::Ml => "ml",
            OracleMode::Hp => "hp",
            OracleMode::Pqnorm => "pqnorm",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Ml(MlCertificate),
    Hp(HpCertificate),
    PqNorm(PqNormOutcome),
    Oracle { mode: OracleMode, result: OracleResult },
}

impl Outcome {
    pub fn value(&self) -> f64 {
        match self {
            Outcome::Ml(c) => c.value,
            Outcome::Hp(c) => c.value,
            Outcome::PqNorm(c) => c.value,
            Outcome::Oracle { result, .. } => result.value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub value: f64,
    pub method: OracleMethod,
    pub resolution: f64,
    /// `value / oracle value`; absent when the oracle value is zero.
    pub ratio: Option<f64>,
}

/// Wall-clock data; the only part of a report that differs between
/// otherwise identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timestamp {
    pub unix_ms: u64,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub instance: InstanceSummary,
    pub seed: u64,
    pub config: Settings,
    pub outcome: Outcome,
    pub oracle: Option<OracleComparison>,
    pub notes: Vec<String>,
    pub timestamp: Option<Timestamp>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// Human-readable rendering. The timestamp is the last line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let w = &mut s;
        let _ = writeln!(w, "command: {}", self.command);
        let _ = writeln!(w, "dims: {:?} (order {})", self.instance.dims, self.instance.order);
        let _ = writeln!(w, "p: {}", self.instance.p);
        let _ = writeln!(w, "seed: {}", self.seed);
        let c = &self.config.solver;
        let _ = writeln!(
            w,
            "config: tol={} max_iter={} trials={} max_samples={} amplified={} strategy={} threads={} steps={}",
            c.tol, c.max_iter, c.trials, c.max_samples, c.amplified, c.strategy, c.threads, self.config.steps
        );
        match &self.outcome {
            Outcome::Ml(cert) => {
                let _ = writeln!(w, "value: {}", cert.value);
                let _ = writeln!(w, "relaxation: {}", cert.relax_value);
                let _ = writeln!(w, "trials: {}  leaf solves: {}", cert.trials_used, cert.leaf_solves);
                for (k, x) in cert.xs.iter().enumerate() {
                    let _ = writeln!(w, "x{}: {}", k + 1, vector(x));
                }
            }
            Outcome::Hp(cert) => {
                let _ = writeln!(w, "value: {}", cert.value);
                let _ = writeln!(w, "multilinear value: {}", cert.ml_value);
                let _ = writeln!(w, "parity: {}", cert.parity);
                if let Some(g) = cert.guarantee {
                    let _ = writeln!(w, "guaranteed: {g}");
                }
                let _ = writeln!(w, "beta: {:?}", cert.beta);
                let _ = writeln!(w, "x: {}", vector(&cert.x_hat));
            }
            Outcome::PqNorm(out) => {
                let _ = writeln!(w, "value: {}", out.value);
                let _ = writeln!(w, "relaxation: {}", out.relaxation);
                if let Some(r) = out.gap_ratio {
                    let _ = writeln!(w, "relaxation / value: {r}");
                }
                let _ = writeln!(w, "y: {}", vector(&out.y));
                let _ = writeln!(w, "z: {}", vector(&out.z));
            }
            Outcome::Oracle { mode, result } => {
                let _ = writeln!(w, "mode: {mode}");
                let _ = writeln!(w, "value: {}", result.value);
                let _ = writeln!(w, "method: {}", method_name(result.method));
                if result.resolution > 0.0 {
                    let _ = writeln!(w, "resolution: {}", result.resolution);
                }
                for (k, x) in result.argmax.iter().enumerate() {
                    let _ = writeln!(w, "x{}: {}", k + 1, vector(x));
                }
            }
        }
        if let Some(o) = &self.oracle {
            let _ = writeln!(w, "oracle: {} ({})", o.value, method_name(o.method));
            if let Some(r) = o.ratio {
                let _ = writeln!(w, "ratio: {r}");
            }
        }
        for note in &self.notes {
            let _ = writeln!(w, "note: {note}");
        }
        if let Some(t) = &self.timestamp {
            let _ = writeln!(
                w,
                "timestamp: {} ms since epoch, {:.3} ms elapsed",
                t.unix_ms, t.elapsed_ms
            );
        }
        s
    }
}

fn method_name(m: OracleMethod) -> &'static str {
    match m {
        OracleMethod::VertexEnum => "vertex enumeration",
        OracleMethod::Grid => "grid",
        OracleMethod::ClosedForm => "closed form",
    }
}

fn vector(x: &[f64]) -> String {
    let parts: Vec<String> = x.iter().map(|v| v.to_string()).collect();
    format!("[{}]", parts.join(", "))
}
