//! Lower bounds on `‖B‖_{p→q}` (`q = p/(p−1)`, `p ∈ (2, ∞]`) from the Gram
//! relaxation and randomized sign rounding.
//!
//! The relaxation replaces the rank-one matrix `(y, z)(y, z)ᵀ` by a psd
//! matrix whose diagonal blocks lie in the unit `L_{p/2}` ball. Its optimum
//! `vec_p(B)` sandwiches the norm: `‖B‖_{p→q} ≤ vec_p(B) ≤ K_G·‖B‖_{p→q}`.
//! Rounding keeps the Gram lengths and picks signs from the unit
//! directions, so every rounded pair is feasible.

mod vecp;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::{RoundingStrategy, SolverConfig};
use crate::error::{Error, Result};
use crate::norms::{dot, Exponent};
use crate::tensor::Tensor;

pub use crate::norms::holder_dual;

/// Krivine's constant `c = ln(1 + √2)`, the root of `sinh(c) = 1`.
pub const KRIVINE_C: f64 = 0.881_373_587_019_543;

/// Upper bound on the Grothendieck constant, `π/(2 ln(1+√2)) ≈ 1.7822`.
pub const GROTHENDIECK_BOUND: f64 = std::f64::consts::PI / (2.0 * KRIVINE_C);

/// Expected single-trial ratio of Krivine rounding, `2c/π ≈ 0.5611`.
pub const KRIVINE_RATIO: f64 = 2.0 * KRIVINE_C / std::f64::consts::PI;

/// Factorized feasible point of the relaxation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramSolution {
    pub u_dirs: Vec<Vec<f64>>,
    pub v_dirs: Vec<Vec<f64>>,
    pub u_lens: Vec<f64>,
    pub v_lens: Vec<f64>,
    pub value: f64,
}

impl GramSolution {
    /// `Σᵢⱼ B_ij·aᵢ·bⱼ·⟨uᵢ, vⱼ⟩`.
    pub fn objective(&self, b: &DMatrix<f64>) -> f64 {
        let mut total = 0.0;
        for (i, (ui, ai)) in self.u_dirs.iter().zip(&self.u_lens).enumerate() {
            for (j, (vj, bj)) in self.v_dirs.iter().zip(&self.v_lens).enumerate() {
                total += b[(i, j)] * ai * bj * dot(ui, vj);
            }
        }
        total
    }

    pub fn rank(&self) -> usize {
        self.u_dirs.first().map_or(0, Vec::len)
    }
}

/// Feasible pair `(y, z)` with `value = yᵀBz`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundedPair {
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub value: f64,
}

/// A rounded pair together with the relaxation it was rounded from.
#[derive(Debug, Clone, PartialEq)]
pub struct PqNormEstimate {
    pub pair: RoundedPair,
    pub relaxation: GramSolution,
}

pub(crate) fn to_matrix(b: &Tensor) -> Result<DMatrix<f64>> {
    if b.order() != 2 {
        return Err(Error::shape(format!("expected a matrix, got order {}", b.order())));
    }
    let (m, n) = (b.dims()[0], b.dims()[1]);
    Ok(DMatrix::from_row_slice(m, n, b.data()))
}

fn bilinear(b: &DMatrix<f64>, y: &[f64], z: &[f64]) -> f64 {
    let mut total = 0.0;
    for (i, yi) in y.iter().enumerate() {
        if *yi == 0.0 {
            continue;
        }
        let row: f64 = z.iter().enumerate().map(|(j, zj)| b[(i, j)] * zj).sum();
        total += yi * row;
    }
    total
}

/// Solves the Gram relaxation to relative accuracy `tol`.
///
/// `B` is normalized to unit Frobenius norm internally, so the result
/// scales exactly with `B`.
pub fn solve_vecp(b: &Tensor, p: Exponent, tol: f64, max_iter: usize) -> Result<GramSolution> {
    p.require_above_two()?;
    if tol.is_nan() || tol <= 0.0 || max_iter == 0 {
        return Err(Error::domain("solve_vecp needs tol > 0 and max_iter >= 1"));
    }
    let bm = to_matrix(b)?;
    solve_vecp_matrix(&bm, p.value(), tol, max_iter)
}

pub(crate) fn solve_vecp_matrix(bm: &DMatrix<f64>, p: f64, tol: f64, max_iter: usize) -> Result<GramSolution> {
    let scale = bm.norm();
    if scale == 0.0 {
        return Err(Error::degenerate("relaxation of the zero matrix"));
    }
    let unit = bm / scale;
    let rescale = |mut g: GramSolution| {
        g.value = g.objective(bm);
        g
    };
    match vecp::solve_checked(&unit, p, tol, max_iter) {
        Ok(run) => Ok(rescale(run.solution)),
        Err(Error::NonConvergence {
            iterations,
            residual,
            best,
        }) => Err(Error::NonConvergence {
            iterations,
            residual,
            best: Box::new(rescale(*best)),
        }),
        Err(e) => Err(e),
    }
}

/// Row `i` of the returned matrix is the covariance factor of the Gaussian
/// projection used to sign index `i` (first the `m` row indices, then the
/// `n` column indices).
fn rounding_factor(g: &GramSolution, strategy: RoundingStrategy) -> Vec<Vec<f64>> {
    let dirs: Vec<&Vec<f64>> = g.u_dirs.iter().chain(&g.v_dirs).collect();
    match strategy {
        RoundingStrategy::Hyperplane => dirs.into_iter().cloned().collect(),
        RoundingStrategy::Krivine => {
            // ⟨φ(u), φ(u')⟩ = sinh(c⟨u,u'⟩), ⟨ψ(v), ψ(v')⟩ = sinh(c⟨v,v'⟩),
            // ⟨φ(u), ψ(v)⟩ = sin(c⟨u,v⟩); factor that kernel matrix directly
            let m = g.u_dirs.len();
            let size = dirs.len();
            let kernel = DMatrix::from_fn(size, size, |i, j| {
                let t = KRIVINE_C * dot(dirs[i], dirs[j]);
                if (i < m) == (j < m) {
                    t.sinh()
                } else {
                    t.sin()
                }
            });
            let eig = SymmetricEigen::new(kernel);
            (0..size)
                .map(|i| {
                    (0..size)
                        .map(|k| eig.eigenvalues[k].max(0.0).sqrt() * eig.eigenvectors[(i, k)])
                        .collect()
                })
                .collect()
        }
    }
}

struct Rounder<'a> {
    b: &'a DMatrix<f64>,
    g: &'a GramSolution,
    factor: Vec<Vec<f64>>,
    width: usize,
}

impl<'a> Rounder<'a> {
    fn new(b: &'a DMatrix<f64>, g: &'a GramSolution, strategy: RoundingStrategy) -> Self {
        let factor = rounding_factor(g, strategy);
        let width = factor.first().map_or(0, Vec::len);
        Rounder { b, g, factor, width }
    }

    fn trial(&self, rng: &mut impl Rng) -> RoundedPair {
        let gauss: Vec<f64> = (0..self.width).map(|_| rng.sample(StandardNormal)).collect();
        let sign = |row: &Vec<f64>| if dot(row, &gauss) >= 0.0 { 1.0 } else { -1.0 };
        let m = self.g.u_lens.len();
        let y: Vec<f64> = self.factor[..m]
            .iter()
            .zip(&self.g.u_lens)
            .map(|(row, a)| sign(row) * a)
            .collect();
        let z: Vec<f64> = self.factor[m..]
            .iter()
            .zip(&self.g.v_lens)
            .map(|(row, b)| sign(row) * b)
            .collect();
        let value = bilinear(self.b, &y, &z);
        RoundedPair { y, z, value }
    }
}

fn trial_rng(base: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(trial as u64);
    rng
}

fn check_gram_shape(b: &DMatrix<f64>, g: &GramSolution) -> Result<()> {
    if g.u_lens.len() != b.nrows() || g.v_lens.len() != b.ncols() {
        return Err(Error::shape(format!(
            "Gram solution is {}x{}, matrix is {}x{}",
            g.u_lens.len(),
            g.v_lens.len(),
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(())
}

/// Best of `trials` independent roundings (first maximum wins).
///
/// One `u64` is drawn from `rng`; trial `k` uses the ChaCha stream `k` of
/// that seed, so any trial can be replayed on its own.
pub fn round_gram(
    b: &Tensor,
    g: &GramSolution,
    strategy: RoundingStrategy,
    trials: usize,
    rng: &mut impl RngCore,
) -> Result<RoundedPair> {
    let bm = to_matrix(b)?;
    round_gram_matrix(&bm, g, strategy, trials, rng)
}

pub(crate) fn round_gram_matrix(
    bm: &DMatrix<f64>,
    g: &GramSolution,
    strategy: RoundingStrategy,
    trials: usize,
    rng: &mut impl RngCore,
) -> Result<RoundedPair> {
    check_gram_shape(bm, g)?;
    if trials == 0 {
        return Err(Error::domain("round_gram needs at least one trial"));
    }
    let rounder = Rounder::new(bm, g, strategy);
    let base = rng.next_u64();
    let mut best = rounder.trial(&mut trial_rng(base, 0));
    for k in 1..trials {
        let cand = rounder.trial(&mut trial_rng(base, k));
        if cand.value > best.value {
            best = cand;
        }
    }
    Ok(best)
}

/// Signed values of `trials` independent single roundings, in trial order.
pub fn rounding_samples(
    b: &Tensor,
    g: &GramSolution,
    strategy: RoundingStrategy,
    trials: usize,
    rng: &mut impl RngCore,
) -> Result<Vec<f64>> {
    let bm = to_matrix(b)?;
    check_gram_shape(&bm, g)?;
    let rounder = Rounder::new(&bm, g, strategy);
    let base = rng.next_u64();
    Ok((0..trials)
        .map(|k| rounder.trial(&mut trial_rng(base, k)).value)
        .collect())
}

/// Relaxation followed by best-of-trials rounding.
pub fn estimate_pq_norm(b: &Tensor, p: Exponent, cfg: &SolverConfig, rng: &mut impl RngCore) -> Result<PqNormEstimate> {
    p.require_above_two()?;
    cfg.validate()?;
    let bm = to_matrix(b)?;
    estimate_matrix(&bm, p.value(), cfg, rng)
}

pub(crate) fn estimate_matrix(
    bm: &DMatrix<f64>,
    p: f64,
    cfg: &SolverConfig,
    rng: &mut impl RngCore,
) -> Result<PqNormEstimate> {
    let relaxation = solve_vecp_matrix(bm, p, cfg.tol, cfg.max_iter)?;
    let pair = round_gram_matrix(bm, &relaxation, cfg.strategy, cfg.trials, rng)?;
    Ok(PqNormEstimate { pair, relaxation })
}

/// A feasible pair whose value lower-bounds `‖B‖_{p→q}`.
pub fn pq_norm_lb(b: &Tensor, p: Exponent, cfg: &SolverConfig, rng: &mut impl RngCore) -> Result<RoundedPair> {
    estimate_pq_norm(b, p, cfg, rng).map(|e| e.pair)
}
