//! One function per subcommand. Each returns a report without timing data.

use std::path::Path;

use lpopt::format::{parse_tensor, write_tensor};
use lpopt::hpopt::HP_SYMMETRY_TOL;
use lpopt::oracle::{exact_ml_linf, grid_hp, grid_ml_refined, OracleResult, MAX_VERTEX_BITS};
use lpopt::pqnorm::GROTHENDIECK_BOUND;
use lpopt::symmetry::symmetrize_with_cap;
use lpopt::{
    estimate_pq_norm, solve_hp, solve_ml, Error, HpInstance, MlInstance, Parity, RoundingStrategy, SymmetricTensor,
    Tensor,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::report::{InstanceSummary, OracleComparison, OracleMode, Outcome, PqNormOutcome, RunReport};
use crate::settings::Settings;

/// Random starts added to the grid oracle at finite `p`.
const ORACLE_STARTS: usize = 50;

pub fn read_tensor(path: &Path) -> anyhow::Result<Tensor> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("reading {}: {e}", path.display())))?;
    Ok(parse_tensor(&text)?)
}

fn summary(t: &Tensor, s: &Settings) -> InstanceSummary {
    InstanceSummary {
        dims: t.dims().to_vec(),
        order: t.order(),
        p: s.p,
    }
}

fn report(command: &str, t: &Tensor, s: &Settings, outcome: Outcome) -> RunReport {
    RunReport {
        command: command.to_string(),
        instance: summary(t, s),
        seed: s.solver.seed,
        config: s.clone(),
        outcome,
        oracle: None,
        notes: Vec::new(),
        timestamp: None,
    }
}

fn compare(value: f64, oracle: OracleResult) -> OracleComparison {
    OracleComparison {
        value: oracle.value,
        method: oracle.method,
        resolution: oracle.resolution,
        ratio: (oracle.value != 0.0).then(|| value / oracle.value),
    }
}

/// Exact for `p = ∞` on small instances, refined grid otherwise.
fn ml_oracle(t: &Tensor, s: &Settings) -> lpopt::Result<OracleResult> {
    if s.p.is_infinite() && t.dims().iter().sum::<usize>() <= MAX_VERTEX_BITS {
        exact_ml_linf(t)
    } else {
        grid_ml_refined(t, s.p, s.steps, ORACLE_STARTS)
    }
}

fn hp_oracle(a: &SymmetricTensor, s: &Settings) -> lpopt::Result<OracleResult> {
    grid_hp(a, s.p, s.steps)
}

fn rng(s: &Settings) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(s.solver.seed)
}

pub fn cmd_solve_ml(path: &Path, s: &Settings) -> anyhow::Result<RunReport> {
    let t = read_tensor(path)?;
    let inst = MlInstance::new(t.clone(), s.p, s.solver.clone())?;
    let cert = solve_ml(&inst, &mut rng(s))?;
    let capped = cert.samples_capped;
    let value = cert.value;
    let mut r = report("solve-ml", &t, s, Outcome::Ml(cert));
    if capped {
        r.notes.push(format!(
            "candidate count capped at max_samples = {}; the success probability bound is reduced",
            s.solver.max_samples
        ));
    }
    if s.oracle {
        r.oracle = Some(compare(value, ml_oracle(&t, s)?));
    }
    Ok(r)
}

pub fn cmd_solve_hp(path: &Path, s: &Settings) -> anyhow::Result<RunReport> {
    let t = read_tensor(path)?;
    let inst = HpInstance::new(t.clone(), s.p, s.solver.clone())?;
    let cert = solve_hp(&inst, &mut rng(s))?;
    let d = t.order();
    let even = cert.parity == Parity::Even;
    let value = cert.value;
    let mut r = report("solve-hp", &t, s, Outcome::Hp(cert));
    if even {
        r.notes.push(format!(
            "even d: the guarantee is relative, f(x) - v_min >= alpha * {d}! * {d}^-{d} * (v_max - v_min) with v_min = min f over the ball; v_min is not computed"
        ));
    }
    if s.oracle {
        r.oracle = Some(compare(value, hp_oracle(&inst.tensor, s)?));
    }
    Ok(r)
}

pub fn cmd_pqnorm(path: &Path, s: &Settings) -> anyhow::Result<RunReport> {
    let t = read_tensor(path)?;
    if t.order() != 2 {
        return Err(Error::Shape(format!("pqnorm needs a matrix, got order {}", t.order())).into());
    }
    let est = estimate_pq_norm(&t, s.p, &s.solver, &mut rng(s))?;
    let mut pair = est.pair;
    if pair.value < 0.0 {
        pair.y.iter_mut().for_each(|v| *v = -*v);
        pair.value = -pair.value;
    }
    let relaxation = est.relaxation.value;
    let value = pair.value;
    let outcome = PqNormOutcome {
        y: pair.y,
        z: pair.z,
        value,
        relaxation,
        gap_ratio: (value > 0.0).then(|| relaxation / value),
    };
    let mut r = report("pqnorm", &t, s, Outcome::PqNorm(outcome));
    if s.solver.strategy == RoundingStrategy::Krivine {
        r.notes.push(format!(
            "expected single-trial Krivine value is at least relaxation / {GROTHENDIECK_BOUND:.4}"
        ));
    }
    if s.oracle {
        r.oracle = Some(compare(value, ml_oracle(&t, s)?));
    }
    Ok(r)
}

pub fn cmd_oracle(path: &Path, mode: OracleMode, s: &Settings) -> anyhow::Result<RunReport> {
    let t = read_tensor(path)?;
    let result = match mode {
        OracleMode::Ml => ml_oracle(&t, s)?,
        OracleMode::Pqnorm => {
            if t.order() != 2 {
                return Err(Error::Shape(format!("pqnorm oracle needs a matrix, got order {}", t.order())).into());
            }
            ml_oracle(&t, s)?
        }
        OracleMode::Hp => hp_oracle(&SymmetricTensor::new(t.clone(), HP_SYMMETRY_TOL)?, s)?,
    };
    Ok(report("oracle", &t, s, Outcome::Oracle { mode, result }))
}

/// `sym(A)` in the tensor file format.
pub fn cmd_symmetrize(path: &Path, max_entries: usize) -> anyhow::Result<String> {
    let t = read_tensor(path)?;
    Ok(write_tensor(&symmetrize_with_cap(&t, max_entries)?))
}
