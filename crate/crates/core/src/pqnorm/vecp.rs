//! Barrier solver for the Gram relaxation of `‖B‖_{p→q}`.
//!
//! The primal maximizes `C•X` with `C = ½[[0, B], [Bᵀ, 0]]` over symmetric
//! `X ⪰ 0` whose two diagonal blocks satisfy `‖diag‖_r ≤ 1`, `r = p/2`
//! (`r = ∞` for `p = ∞`). Its conic dual is
//!
//! ```text
//! minimize ‖d₁‖_s + ‖d₂‖_s   subject to   Diag(d) − C ⪰ 0,   s = r/(r−1)
//! ```
//!
//! We follow the central path of `‖d₁‖_s + ‖d₂‖_s − μ·log det(Diag(d) − C)`
//! with damped Newton steps on `d`. At a central point `X = μ·S⁻¹` is primal
//! feasible and the duality gap is exactly `μ·(m+n)`. Away from the path we
//! extract a feasible Gram factorization from `μ·S⁻¹` and stop once its
//! value is within `tol` of the dual bound, so every returned solution
//! carries an upper bound certifying its accuracy.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::norms::lp_norm;

use super::GramSolution;

/// Factor applied to `μ` after each centering phase.
const MU_SHRINK: f64 = 0.2;
/// Squared Newton decrement, relative to `μ`, below which a point counts
/// as centered.
const CENTERED: f64 = 0.25;
/// The same threshold once `μ·(m+n)` is below the requested gap.
const TIGHT_CENTERED: f64 = 1e-10;
/// Relative eigenvalue floor when extracting Gram factors.
const RANK_FLOOR: f64 = 1e-13;
const ARMIJO: f64 = 1e-4;
/// Decrement, relative to the dual value, that double precision resolves.
const DECREMENT_FLOOR: f64 = 1e-14;

/// `‖d‖_s` for `d > 0` with gradient and Hessian, `s ∈ [1, ∞)`.
fn norm_derivatives(d: &[f64], s: f64) -> (f64, Vec<f64>, DMatrix<f64>) {
    let k = d.len();
    if s == 1.0 {
        return (d.iter().sum(), vec![1.0; k], DMatrix::zeros(k, k));
    }
    let n = lp_norm(d, s);
    let ratio: Vec<f64> = d.iter().map(|v| v / n).collect();
    let grad: Vec<f64> = ratio.iter().map(|t| t.powf(s - 1.0)).collect();
    let mut hess = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let diag = if i == j { ratio[i].powf(s - 2.0) } else { 0.0 };
            hess[(i, j)] = (s - 1.0) / n * (diag - grad[i] * grad[j]);
        }
    }
    (n, grad, hess)
}

struct Problem<'a> {
    b: &'a DMatrix<f64>,
    c: DMatrix<f64>,
    m: usize,
    /// Dual exponent `s`.
    s: f64,
    p: f64,
}

/// Barrier objective pieces at one dual point.
struct Point {
    d: Vec<f64>,
    dual: f64,
    s_inv: DMatrix<f64>,
    log_det: f64,
}

impl<'a> Problem<'a> {
    fn new(b: &'a DMatrix<f64>, p: f64) -> Self {
        let (m, n) = b.shape();
        let mut c = DMatrix::zeros(m + n, m + n);
        for i in 0..m {
            for j in 0..n {
                c[(i, m + j)] = 0.5 * b[(i, j)];
                c[(m + j, i)] = 0.5 * b[(i, j)];
            }
        }
        let s = if p.is_infinite() { 1.0 } else { p / (p - 2.0) };
        Problem { b, c, m, s, p }
    }

    fn size(&self) -> usize {
        self.c.nrows()
    }

    fn dual_value(&self, d: &[f64]) -> f64 {
        let norm = |v: &[f64]| {
            if self.s == 1.0 {
                v.iter().sum()
            } else {
                lp_norm(v, self.s)
            }
        };
        norm(&d[..self.m]) + norm(&d[self.m..])
    }

    /// `None` when `d` leaves the interior of the dual cone.
    fn point(&self, d: Vec<f64>) -> Option<Point> {
        if d.iter().any(|v| *v <= 0.0 || !v.is_finite()) {
            return None;
        }
        let mut slack = -self.c.clone();
        for (i, v) in d.iter().enumerate() {
            slack[(i, i)] += v;
        }
        let chol = slack.cholesky()?;
        let l = chol.l_dirty();
        let log_det = 2.0 * (0..d.len()).map(|i| l[(i, i)].ln()).sum::<f64>();
        let s_inv = chol.inverse();
        let dual = self.dual_value(&d);
        Some(Point {
            d,
            dual,
            s_inv,
            log_det,
        })
    }

    fn barrier(&self, pt: &Point, mu: f64) -> f64 {
        pt.dual - mu * pt.log_det
    }

    /// Newton direction and squared decrement at `pt`.
    fn newton(&self, pt: &Point, mu: f64) -> Option<(DVector<f64>, f64)> {
        let size = self.size();
        let (_, g1, h1) = norm_derivatives(&pt.d[..self.m], self.s);
        let (_, g2, h2) = norm_derivatives(&pt.d[self.m..], self.s);
        let mut grad = DVector::zeros(size);
        let mut hess = pt.s_inv.component_mul(&pt.s_inv) * mu;
        for i in 0..size {
            grad[i] = if i < self.m { g1[i] } else { g2[i - self.m] } - mu * pt.s_inv[(i, i)];
        }
        hess.view_mut((0, 0), (self.m, self.m)).add_assign(&h1);
        let n = size - self.m;
        hess.view_mut((self.m, self.m), (n, n)).add_assign(&h2);
        let chol = hess.cholesky()?;
        let step = -chol.solve(&grad);
        let decrement = -grad.dot(&step);
        Some((step, decrement.max(0.0)))
    }

    fn primal(&self, pt: &Point, mu: f64) -> GramSolution {
        extract(&(&pt.s_inv * mu), self.b, self.p)
    }
}

trait AddAssign {
    fn add_assign(self, rhs: &DMatrix<f64>);
}

impl AddAssign for nalgebra::DMatrixViewMut<'_, f64> {
    fn add_assign(mut self, rhs: &DMatrix<f64>) {
        self += rhs;
    }
}

/// Outcome of [`solve`]: the extracted solution and convergence data.
pub(crate) struct VecpRun {
    pub solution: GramSolution,
    /// Dual bound at the last iterate; `vec_p(B) ≤ upper`.
    #[cfg_attr(not(test), allow(dead_code))]
    pub upper: f64,
    pub iterations: usize,
    /// Relative gap between `upper` and the solution value.
    pub residual: f64,
    pub converged: bool,
}

/// `b` must be nonzero; the caller normalizes it.
pub(crate) fn solve(b: &DMatrix<f64>, p: f64, tol: f64, max_iter: usize) -> VecpRun {
    let prob = Problem::new(b, p);
    let size = prob.size();
    let start = 2.0 * prob.c.norm() + f64::MIN_POSITIVE;
    let mut pt = prob
        .point(vec![start; size])
        .expect("diagonal dominance gives an interior start");
    let mut mu = pt.dual / size as f64;
    let mut best = prob.primal(&pt, mu);
    let mut upper = pt.dual;
    let mut iterations = 0;
    let gap = |upper: f64, value: f64| (upper - value) / upper.abs().max(f64::MIN_POSITIVE);

    while iterations < max_iter {
        iterations += 1;
        let Some((step, decrement)) = prob.newton(&pt, mu) else {
            break;
        };
        // decrement of the barrier scaled by 1/μ, the self-concordant form
        let near_end = mu * size as f64 <= tol * pt.dual;
        let centered = if near_end { TIGHT_CENTERED } else { CENTERED };
        if decrement <= (centered * mu).max(DECREMENT_FLOOR * pt.dual) {
            let cand = prob.primal(&pt, mu);
            upper = upper.min(pt.dual);
            if cand.value > best.value {
                best = cand;
            }
            let residual = gap(upper, best.value);
            if residual <= tol {
                return VecpRun {
                    solution: best,
                    upper,
                    iterations,
                    residual,
                    converged: true,
                };
            }
            mu *= MU_SHRINK;
            continue;
        }
        let f0 = prob.barrier(&pt, mu);
        let mut alpha = 1.0;
        let mut moved = false;
        while alpha > 1e-12 {
            let d: Vec<f64> = pt.d.iter().zip(step.iter()).map(|(v, s)| v + alpha * s).collect();
            if let Some(next) = prob.point(d) {
                if prob.barrier(&next, mu) <= f0 - ARMIJO * alpha * decrement {
                    pt = next;
                    moved = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !moved {
            // stalled at this μ; numerical floor for the centering
            mu *= MU_SHRINK;
        }
    }
    let cand = prob.primal(&pt, mu);
    if cand.value > best.value {
        best = cand;
    }
    upper = upper.min(pt.dual);
    let residual = gap(upper, best.value);
    VecpRun {
        solution: best,
        upper,
        iterations,
        converged: residual <= tol,
        residual,
    }
}

/// Gram factors of the psd part of `x`, rescaled so each length vector is
/// feasible.
pub(crate) fn extract(x: &DMatrix<f64>, b: &DMatrix<f64>, p: f64) -> GramSolution {
    let (m, n) = b.shape();
    let size = m + n;
    let sym = (x + x.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let top = eig.eigenvalues.iter().fold(0.0_f64, |a, v| a.max(*v));
    let keep: Vec<usize> = (0..size).filter(|&k| eig.eigenvalues[k] > RANK_FLOOR * top).collect();
    let rank = keep.len().max(1);
    let split = |range: std::ops::Range<usize>| -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut dirs = Vec::with_capacity(range.len());
        let mut lens = Vec::with_capacity(range.len());
        for i in range {
            // Gram vector of index i: (√λ_k Q_ik)_k
            let mut g: Vec<f64> = keep
                .iter()
                .map(|&k| eig.eigenvalues[k].sqrt() * eig.eigenvectors[(i, k)])
                .collect();
            if g.is_empty() {
                g = vec![0.0; rank];
            }
            let len = lp_norm(&g, 2.0);
            if len > 0.0 {
                g.iter_mut().for_each(|v| *v /= len);
            } else {
                g[0] = 1.0;
            }
            dirs.push(g);
            lens.push(len);
        }
        (dirs, lens)
    };
    let (u_dirs, mut u_lens) = split(0..m);
    let (v_dirs, mut v_lens) = split(m..size);
    for lens in [&mut u_lens, &mut v_lens] {
        if p.is_infinite() {
            lens.iter_mut().for_each(|l| *l = l.min(1.0));
            continue;
        }
        let norm = lp_norm(lens, p);
        if norm > 0.0 {
            lens.iter_mut().for_each(|l| *l /= norm);
        }
    }
    let mut sol = GramSolution {
        u_dirs,
        v_dirs,
        u_lens,
        v_lens,
        value: 0.0,
    };
    sol.value = sol.objective(b);
    sol
}

/// Wraps [`solve`] with the public error contract.
pub(crate) fn solve_checked(b: &DMatrix<f64>, p: f64, tol: f64, max_iter: usize) -> Result<VecpRun> {
    let run = solve(b, p, tol, max_iter);
    if run.converged {
        Ok(run)
    } else {
        Err(Error::NonConvergence {
            iterations: run.iterations,
            residual: run.residual,
            best: Box::new(run.solution),
        })
    }
}
