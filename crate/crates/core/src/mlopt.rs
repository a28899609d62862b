//! Randomized recursion for `max F_A(x¹, …, x^d)` over unit `L_p` balls.
//!
//! Slot 1 is peeled off by sampling candidate unit vectors `ξ`; each
//! candidate is scored by recursively solving the order `d−1` problem on
//! the contraction `A(ξ)`. At order 2 the Gram relaxation and rounding
//! take over.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::hpopt::HpInstance;
use crate::norms::Exponent;
use crate::pqnorm::{estimate_matrix, to_matrix};
use crate::sampler::{raw_sample_count, sample_candidate, sample_count};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct MlInstance {
    pub tensor: Tensor,
    pub p: Exponent,
    pub cfg: SolverConfig,
}

impl MlInstance {
    pub fn new(tensor: Tensor, p: Exponent, cfg: SolverConfig) -> Result<Self> {
        p.require_above_two()?;
        cfg.validate()?;
        if tensor.order() < 2 {
            return Err(Error::shape(format!("need order >= 2, got {}", tensor.order())));
        }
        if tensor.len() > cfg.max_entries {
            return Err(Error::resource(format!(
                "tensor has {} entries, cap is {}",
                tensor.len(),
                cfg.max_entries
            )));
        }
        if tensor.is_zero() {
            return Err(Error::degenerate("zero tensor"));
        }
        Ok(MlInstance { tensor, p, cfg })
    }
}

/// Feasible vectors for every slot and the value they achieve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlCertificate {
    pub xs: Vec<Vec<f64>>,
    /// `F_A(xs) ≥ 0`.
    pub value: f64,
    pub seed: u64,
    /// Slot-1 candidates at the top level, or rounding trials when `d = 2`.
    pub trials_used: usize,
    /// Order-2 relaxation solves across the whole recursion.
    pub leaf_solves: usize,
    /// Whether `max_samples` cut the candidate count at some level.
    pub samples_capped: bool,
    /// Best relaxation value over the chosen recursion branches.
    pub relax_value: f64,
    /// Whether slot 1 was negated to make the value nonnegative.
    pub sign_flipped: bool,
}

struct Level {
    xs: Vec<Vec<f64>>,
    value: f64,
    relax: f64,
    leaves: usize,
    capped: bool,
}

impl Level {
    fn zero(dims: &[usize]) -> Level {
        Level {
            xs: dims.iter().map(|&n| vec![0.0; n]).collect(),
            value: 0.0,
            relax: 0.0,
            leaves: 0,
            capped: false,
        }
    }
}

fn candidate_rng(base: u64, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(k as u64);
    rng
}

fn solve_pair(t: &Tensor, p: Exponent, cfg: &SolverConfig, rng: &mut ChaCha8Rng) -> Result<Level> {
    if t.is_zero() {
        return Ok(Level::zero(t.dims()));
    }
    let bm = to_matrix(t)?;
    let est = estimate_matrix(&bm, p.value(), cfg, rng)?;
    let mut y = est.pair.y;
    let mut value = est.pair.value;
    if value < 0.0 {
        y.iter_mut().for_each(|v| *v = -*v);
        value = -value;
    }
    Ok(Level {
        xs: vec![y, est.pair.z],
        value,
        relax: est.relaxation.value,
        leaves: 1,
        capped: false,
    })
}

fn solve_level(t: &Tensor, p: Exponent, cfg: &SolverConfig, rng: &mut ChaCha8Rng, parallel: bool) -> Result<Level> {
    if t.order() == 2 {
        return solve_pair(t, p, cfg, rng);
    }
    if t.is_zero() {
        return Ok(Level::zero(t.dims()));
    }
    let n1 = t.dims()[0];
    let count = sample_count(n1, p, cfg.amplified, cfg.max_samples);
    let capped = raw_sample_count(n1, p, cfg.amplified).ceil() > cfg.max_samples as f64;
    let base = rng.next_u64();
    let eval = |k: usize| -> Result<(Vec<f64>, Level)> {
        let mut r = candidate_rng(base, k);
        let xi = sample_candidate(n1, p, &mut r)?;
        let sub = t.contract_axis(0, &xi)?;
        Ok((xi, solve_level(&sub, p, cfg, &mut r, parallel)?))
    };
    let results: Vec<(Vec<f64>, Level)> = if parallel {
        (0..count).into_par_iter().map(eval).collect::<Result<_>>()?
    } else {
        (0..count).map(eval).collect::<Result<_>>()?
    };
    let mut leaves = 0;
    let mut relax = f64::NEG_INFINITY;
    let mut any_capped = capped;
    let mut best: Option<(Vec<f64>, Level)> = None;
    for (xi, level) in results {
        leaves += level.leaves;
        relax = relax.max(level.relax);
        any_capped |= level.capped;
        if best.as_ref().map_or(true, |(_, b)| level.value > b.value) {
            best = Some((xi, level));
        }
    }
    let (xi, level) = best.expect("sample_count is at least 1");
    let mut xs = Vec::with_capacity(t.order());
    xs.push(xi);
    xs.extend(level.xs);
    Ok(Level {
        xs,
        value: level.value,
        relax,
        leaves,
        capped: any_capped,
    })
}

fn certify(inst: &MlInstance, level: Level, trials_used: usize) -> Result<MlCertificate> {
    let mut xs = level.xs;
    let mut value = inst.tensor.eval_multilinear(&xs)?;
    let mut sign_flipped = false;
    if value < 0.0 {
        xs[0].iter_mut().for_each(|v| *v = -*v);
        value = -value;
        sign_flipped = true;
    }
    Ok(MlCertificate {
        xs,
        value,
        seed: inst.cfg.seed,
        trials_used,
        leaf_solves: level.leaves,
        samples_capped: level.capped,
        relax_value: level.relax,
        sign_flipped,
    })
}

fn run<T>(threads: usize, f: impl FnOnce(bool) -> Result<T> + Send) -> Result<T>
where
    T: Send,
{
    if threads <= 1 {
        return f(false);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::resource(format!("thread pool: {e}")))?;
    pool.install(|| f(true))
}

/// Order-2 case: a rounded pair from the Gram relaxation.
pub fn solve_ml_d2(b: &Tensor, p: Exponent, cfg: &SolverConfig, rng: &mut impl RngCore) -> Result<MlCertificate> {
    let inst = MlInstance::new(b.clone(), p, cfg.clone())?;
    if b.order() != 2 {
        return Err(Error::shape(format!("expected a matrix, got order {}", b.order())));
    }
    let mut r = ChaCha8Rng::seed_from_u64(rng.next_u64());
    let level = solve_pair(b, p, cfg, &mut r)?;
    certify(&inst, level, cfg.trials)
}

/// Solves an instance of any order `d ≥ 2`.
///
/// Results depend only on the instance and the state of `rng`, not on
/// `cfg.threads`.
pub fn solve_ml(inst: &MlInstance, rng: &mut impl RngCore) -> Result<MlCertificate> {
    if inst.tensor.order() == 2 {
        return solve_ml_d2(&inst.tensor, inst.p, &inst.cfg, rng);
    }
    let mut r = ChaCha8Rng::seed_from_u64(rng.next_u64());
    let top = sample_count(inst.tensor.dims()[0], inst.p, inst.cfg.amplified, inst.cfg.max_samples);
    let level = run(inst.cfg.threads, |parallel| {
        solve_level(&inst.tensor, inst.p, &inst.cfg, &mut r, parallel)
    })?;
    certify(inst, level, top)
}

/// The multilinear relaxation of a polynomial instance: same tensor, with
/// the `d` copies of `x` decoupled.
pub fn relax_to_ml(hp: &HpInstance) -> MlInstance {
    MlInstance {
        tensor: hp.tensor.tensor().clone(),
        p: hp.p,
        cfg: hp.cfg.clone(),
    }
}
