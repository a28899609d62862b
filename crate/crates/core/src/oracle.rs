//! Brute-force baselines: vertex enumeration for `p = ∞`, angular grids on
//! `L_p` spheres, and a few closed forms.
//!
//! Nothing here calls the solvers, so the oracles can be used to check
//! them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::{holder_dual_any, lp_norm, normalize_lp, Exponent};
use crate::symmetry::symmetrize;
use crate::tensor::{SymmetricTensor, Tensor};

/// Largest `Σ nᵢ` accepted by [`exact_ml_linf`].
pub const MAX_VERTEX_BITS: usize = 24;
/// Largest number of objective evaluations accepted by the grid oracles.
pub const MAX_GRID_EVALS: f64 = 1e8;
/// Block-coordinate sweeps per start in [`refine_ml`].
const ASCENT_SWEEPS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    VertexEnum,
    Grid,
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub value: f64,
    pub argmax: Vec<Vec<f64>>,
    pub method: OracleMethod,
    /// Angular grid step, `0` for exact methods.
    pub resolution: f64,
}

fn sign_vector(mask: u64, n: usize) -> Vec<f64> {
    (0..n).map(|i| if mask >> i & 1 == 0 { 1.0 } else { -1.0 }).collect()
}

/// `max ⟨g, x⟩` over the unit `L_p` ball: `‖g‖_q` and its maximizer.
fn last_slot(g: &[f64], p: f64) -> (f64, Vec<f64>) {
    let q = if p.is_infinite() {
        1.0
    } else if p == 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    };
    match holder_dual_any(g, q) {
        Some(x) => (lp_norm(g, q), x),
        None => {
            let mut x = vec![0.0; g.len()];
            x[0] = 1.0;
            (0.0, x)
        }
    }
}

/// Maximizes over `points[0] × … × points[d−2]` with the last slot in
/// closed form. Ties keep the first maximizer in enumeration order.
fn sweep(t: &Tensor, points: &[Vec<Vec<f64>>], p: f64) -> Result<(f64, Vec<Vec<f64>>)> {
    fn rec(t: &Tensor, points: &[Vec<Vec<f64>>], p: f64) -> (f64, Vec<Vec<f64>>) {
        if t.order() == 1 {
            let (v, x) = last_slot(t.data(), p);
            return (v, vec![x]);
        }
        let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
        for x in &points[0] {
            let sub = t.contract_axis(0, x).expect("grid points match dims");
            let (v, mut rest) = rec(&sub, &points[1..], p);
            if best.as_ref().map_or(true, |(b, _)| v > *b) {
                rest.insert(0, x.clone());
                best = Some((v, rest));
            }
        }
        best.expect("grids are nonempty")
    }
    if t.order() == 1 {
        return Ok(rec(t, points, p));
    }
    // split the outermost slot across threads; reduction keeps the order
    let results: Vec<(f64, Vec<Vec<f64>>)> = points[0]
        .par_iter()
        .map(|x| {
            let sub = t.contract_axis(0, x)?;
            let (v, mut rest) = rec(&sub, &points[1..], p);
            rest.insert(0, x.clone());
            Ok((v, rest))
        })
        .collect::<Result<_>>()?;
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    for (v, xs) in results {
        if best.as_ref().map_or(true, |(b, _)| v > *b) {
            best = Some((v, xs));
        }
    }
    Ok(best.expect("grids are nonempty"))
}

/// Exact `max F_A` over `‖xⁱ‖_∞ ≤ 1` by enumerating sign vectors; the
/// maximum of a multilinear form over a product of boxes is attained at
/// vertices.
pub fn exact_ml_linf(a: &Tensor) -> Result<OracleResult> {
    if a.order() == 0 {
        return Err(Error::shape("order-0 tensor"));
    }
    let bits: usize = a.dims().iter().sum();
    if bits > MAX_VERTEX_BITS {
        return Err(Error::resource(format!(
            "vertex enumeration over 2^{bits} points exceeds 2^{MAX_VERTEX_BITS}"
        )));
    }
    let d = a.order();
    let points: Vec<Vec<Vec<f64>>> = a.dims()[..d - 1]
        .iter()
        .map(|&n| (0..1u64 << n).map(|m| sign_vector(m, n)).collect())
        .collect();
    let (value, mut argmax) = sweep(a, &points, f64::INFINITY)?;
    // the closed-form last slot may leave zeros where the gradient vanishes
    for v in argmax.last_mut().expect("order >= 1") {
        if *v == 0.0 {
            *v = 1.0;
        }
    }
    Ok(OracleResult {
        value,
        argmax,
        method: OracleMethod::VertexEnum,
        resolution: 0.0,
    })
}

/// Points of an angular grid on the unit `L_p` sphere in `Rⁿ`.
///
/// Hyperspherical angles take the values `πk/steps` (polar, `k = 0..=steps`)
/// and `2πk/steps` (azimuth, `k < steps`); each Euclidean direction is then
/// rescaled to unit `p`-norm. Doubling `steps` gives a superset.
pub fn sphere_grid(n: usize, p: f64, steps: usize) -> Result<Vec<Vec<f64>>> {
    if n == 0 || steps == 0 {
        return Err(Error::domain("sphere grid needs n >= 1 and steps >= 1"));
    }
    if n == 1 {
        return Ok(vec![vec![1.0], vec![-1.0]]);
    }
    let count = (steps as f64 + 1.0).powi(n as i32 - 2) * steps as f64;
    if count > MAX_GRID_EVALS {
        return Err(Error::resource(format!("sphere grid of {count:.3e} points")));
    }
    let pi = std::f64::consts::PI;
    let mut out = Vec::with_capacity(count as usize);
    let mut idx = vec![0usize; n - 1];
    loop {
        let mut x = vec![0.0; n];
        let mut sin_prod = 1.0;
        for (k, &i) in idx.iter().enumerate() {
            let angle = if k == n - 2 {
                2.0 * pi * i as f64 / steps as f64
            } else {
                pi * i as f64 / steps as f64
            };
            x[k] = sin_prod * angle.cos();
            sin_prod *= angle.sin();
        }
        x[n - 1] = sin_prod;
        for v in x.iter_mut() {
            if v.abs() < 1e-15 {
                *v = 0.0;
            }
        }
        normalize_lp(&mut x, p);
        out.push(x);
        // odometer: polar angles run to steps inclusive, azimuth exclusive
        let mut k = n - 2;
        loop {
            idx[k] += 1;
            let limit = if k == n - 2 { steps } else { steps + 1 };
            if idx[k] < limit {
                break;
            }
            idx[k] = 0;
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
        }
    }
}

fn grid_points(dims: &[usize], p: f64, steps: usize) -> Result<Vec<Vec<Vec<f64>>>> {
    let mut total = 1.0;
    let mut points = Vec::with_capacity(dims.len());
    for &n in dims {
        let pts = sphere_grid(n, p, steps)?;
        total *= pts.len() as f64;
        if total > MAX_GRID_EVALS {
            return Err(Error::resource(format!(
                "grid of more than {MAX_GRID_EVALS:e} evaluations"
            )));
        }
        points.push(pts);
    }
    Ok(points)
}

/// Lower bound on `max F_A` over unit `L_p` balls from a grid on the first
/// `d−1` spheres, with the last slot in closed form.
pub fn grid_ml(a: &Tensor, p: Exponent, steps: usize) -> Result<OracleResult> {
    if a.order() == 0 {
        return Err(Error::shape("order-0 tensor"));
    }
    let d = a.order();
    let pv = p.value();
    let points = grid_points(&a.dims()[..d - 1], pv, steps)?;
    let (value, argmax) = sweep(a, &points, pv)?;
    Ok(OracleResult {
        value,
        argmax,
        method: if d == 1 {
            OracleMethod::ClosedForm
        } else {
            OracleMethod::Grid
        },
        resolution: if d == 1 {
            0.0
        } else {
            std::f64::consts::PI / steps as f64
        },
    })
}

/// Block-coordinate ascent: each slot in turn is replaced by the Hölder
/// maximizer of its partial gradient. The value never decreases.
fn ascend(a: &Tensor, xs: &mut [Vec<f64>], p: f64) -> f64 {
    let d = a.order();
    let mut value = a.eval_multilinear_unchecked(xs);
    for _ in 0..ASCENT_SWEEPS {
        let before = value;
        for k in 0..d {
            let mut g = a.clone();
            // contract every slot except k, from the back so indices hold
            for j in (0..d).rev() {
                if j != k {
                    g = g.contract_axis(j, &xs[j]).expect("shapes match");
                }
            }
            let (v, x) = last_slot(g.data(), p);
            if v > value {
                xs[k] = x;
                value = a.eval_multilinear_unchecked(xs);
            }
        }
        if value - before <= 1e-15 * value.abs().max(1e-300) {
            break;
        }
    }
    value
}

/// Multi-start ascent from `starts` seeded random points plus the given
/// initial points. Returns the best local maximum found.
pub fn refine_ml(a: &Tensor, p: Exponent, init: &[Vec<Vec<f64>>], starts: usize, seed: u64) -> Result<OracleResult> {
    if a.order() == 0 {
        return Err(Error::shape("order-0 tensor"));
    }
    let pv = p.value();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all: Vec<Vec<Vec<f64>>> = init.to_vec();
    for _ in 0..starts {
        all.push(
            a.dims()
                .iter()
                .map(|&n| loop {
                    let mut x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                    if normalize_lp(&mut x, pv) > 0.0 {
                        break x;
                    }
                })
                .collect(),
        );
    }
    if all.is_empty() {
        return Err(Error::domain("refine_ml needs at least one start"));
    }
    for xs in &all {
        if xs.len() != a.order() || xs.iter().zip(a.dims()).any(|(x, &n)| x.len() != n) {
            return Err(Error::shape("start point does not match tensor dims"));
        }
    }
    let results: Vec<(f64, Vec<Vec<f64>>)> = all.into_par_iter().map(|mut xs| (ascend(a, &mut xs, pv), xs)).collect();
    let (value, argmax) = results
        .into_iter()
        .fold(None, |best: Option<(f64, Vec<Vec<f64>>)>, (v, xs)| match best {
            Some((b, _)) if b >= v => best,
            _ => Some((v, xs)),
        })
        .expect("nonempty");
    Ok(OracleResult {
        value,
        argmax,
        method: OracleMethod::Grid,
        resolution: 0.0,
    })
}

/// [`grid_ml`] followed by [`refine_ml`] from the grid maximizer and
/// `starts` random points; never below the plain grid value.
pub fn grid_ml_refined(a: &Tensor, p: Exponent, steps: usize, starts: usize) -> Result<OracleResult> {
    let grid = grid_ml(a, p, steps)?;
    let refined = refine_ml(a, p, std::slice::from_ref(&grid.argmax), starts, 0x5eed)?;
    Ok(if refined.value > grid.value {
        OracleResult {
            resolution: grid.resolution,
            ..refined
        }
    } else {
        grid
    })
}

/// Lower bound on `max f_A` over the unit `L_p` ball from a grid on the
/// sphere (and the origin, which matters when `f_A ≤ 0` everywhere).
pub fn grid_hp(a: &SymmetricTensor, p: Exponent, steps: usize) -> Result<OracleResult> {
    let n = a.nvars();
    let points = sphere_grid(n, p.value(), steps)?;
    let values: Vec<f64> = points.par_iter().map(|x| a.eval(x)).collect();
    let mut value = 0.0;
    let mut argmax = vec![0.0; n];
    for (v, x) in values.into_iter().zip(points) {
        if v > value {
            value = v;
            argmax = x;
        }
    }
    Ok(OracleResult {
        value,
        argmax: vec![argmax],
        method: OracleMethod::Grid,
        resolution: std::f64::consts::PI / steps as f64,
    })
}

/// `f_n(x) = Σᵢ xᵢ^{1/p}·∏_{j≠i}(d − xⱼ)^{1/p}` on `[0, d]ⁿ`.
pub fn fn_value(x: &[f64], d: usize, p: f64) -> f64 {
    let d = d as f64;
    let e = 1.0 / p;
    (0..x.len())
        .map(|i| {
            x[i].powf(e)
                * (0..x.len())
                    .filter(|&j| j != i)
                    .map(|j| (d - x[j]).powf(e))
                    .product::<f64>()
        })
        .sum()
}

/// `d^{n/p}·n^{1−1/p}·(1−1/n)^{(n−1)/p}`, the value of `f_n` at the
/// balanced point `(d/n, …, d/n)`.
pub fn fn_formula(n: usize, d: usize, p: f64) -> f64 {
    let (nf, df) = (n as f64, d as f64);
    df.powf(nf / p) * nf.powf(1.0 - 1.0 / p) * (1.0 - 1.0 / nf).powf((nf - 1.0) / p)
}

/// Grid maximum of `f_n` over `{0, d/steps, …, d}ⁿ` and the closed-form
/// maximum.
pub fn fn_check(n: usize, d: usize, p: f64, steps: usize) -> Result<(f64, f64)> {
    if n < 2 || n > d {
        return Err(Error::domain(format!("need 2 <= n <= d, got n={n}, d={d}")));
    }
    if p.is_nan() || p < 2.0 || steps == 0 {
        return Err(Error::domain("need p >= 2 and steps >= 1"));
    }
    let count = (steps as f64 + 1.0).powi(n as i32);
    if count > MAX_GRID_EVALS {
        return Err(Error::resource(format!("f_n grid of {count:.3e} points")));
    }
    let e = 1.0 / p;
    let df = d as f64;
    let xs: Vec<f64> = (0..=steps).map(|k| df * k as f64 / steps as f64).collect();
    let up: Vec<f64> = xs.iter().map(|x| x.powf(e)).collect();
    let down: Vec<f64> = xs.iter().map(|x| (df - x).powf(e)).collect();
    let grid_max = (0..=steps)
        .into_par_iter()
        .map(|first| {
            let mut idx = vec![0usize; n];
            idx[0] = first;
            let mut best = f64::NEG_INFINITY;
            loop {
                let value: f64 = (0..n)
                    .map(|i| up[idx[i]] * (0..n).filter(|&j| j != i).map(|j| down[idx[j]]).product::<f64>())
                    .sum();
                best = best.max(value);
                let mut k = n - 1;
                loop {
                    if k == 0 {
                        return best;
                    }
                    idx[k] += 1;
                    if idx[k] <= steps {
                        break;
                    }
                    idx[k] = 0;
                    k -= 1;
                }
            }
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    Ok((grid_max, fn_formula(n, d, p)))
}

/// Both sides of `d!·v_ML(A) = d^{d/p}·v_ML(sym(A))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymEquivalence {
    /// `d!` times the optimum of `F_A` over unit balls.
    pub tau_a: f64,
    /// `d^{d/p}` times the optimum of `F_{sym(A)}` over unit balls, i.e. the
    /// optimum over balls of radius `d^{1/p}`.
    pub tau_b: f64,
    pub rel_gap: f64,
    pub passed: bool,
}

/// Relative tolerance of [`sym_equivalence_check`].
pub const EQUIVALENCE_TOL: f64 = 0.02;

/// Compares both sides of the equivalence with exact vertex enumeration
/// for `p = ∞` and refined grids otherwise.
pub fn sym_equivalence_check(a: &Tensor, p: Exponent, steps: usize) -> Result<SymEquivalence> {
    let d = a.order();
    if d < 2 {
        return Err(Error::shape("equivalence needs order >= 2"));
    }
    let b = symmetrize(a)?;
    let (va, vb) = if p.is_infinite() {
        (exact_ml_linf(a)?.value, exact_ml_linf(&b)?.value)
    } else {
        let starts = 200;
        (
            grid_ml_refined(a, p, steps, starts)?.value,
            grid_ml_refined(&b, p, steps, starts)?.value,
        )
    };
    let fact: f64 = (1..=d).map(|k| k as f64).product();
    let tau_a = fact * va;
    let tau_b = (d as f64).powf(d as f64 / p.value()) * vb;
    let rel_gap = (tau_a - tau_b).abs() / tau_a.abs().max(tau_b.abs()).max(f64::MIN_POSITIVE);
    Ok(SymEquivalence {
        tau_a,
        tau_b,
        rel_gap,
        passed: rel_gap <= EQUIVALENCE_TOL || (tau_a == 0.0 && tau_b == 0.0),
    })
}
