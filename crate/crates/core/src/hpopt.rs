//! `max f_A(x)` over the unit `L_p` ball for super-symmetric `A`.
//!
//! The polynomial problem is relaxed to the multilinear one, solved with
//! [`crate::mlopt::solve_ml`], and a single point is recovered from the `d`
//! multilinear vectors by polarization:
//!
//! ```text
//! E[β₁⋯β_d · f_A(β₁x¹ + ⋯ + β_d x^d)] = d!·F_A(x¹, …, x^d)
//! ```
//!
//! with `β` uniform on `{±1}^d`.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::mlopt::{relax_to_ml, solve_ml};
use crate::norms::{lp_norm, Exponent};
use crate::tensor::{SymmetricTensor, Tensor};

/// Super-symmetry tolerance for polynomial instances.
pub const HP_SYMMETRY_TOL: f64 = 1e-9;
/// Largest order for which all `2^d` sign patterns are enumerated.
pub const MAX_POLARIZATION_ORDER: usize = 20;
/// Slack on `‖x‖_p ≤ 1` for points handed to polarization.
const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct HpInstance {
    pub tensor: SymmetricTensor,
    pub p: Exponent,
    pub cfg: SolverConfig,
}

impl HpInstance {
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
        let tensor = SymmetricTensor::new(tensor, HP_SYMMETRY_TOL)?;
        Ok(HpInstance { tensor, p, cfg })
    }

    pub fn order(&self) -> usize {
        self.tensor.order()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Odd,
    Even,
}

impl Parity {
    pub fn of(d: usize) -> Parity {
        if d % 2 == 1 {
            Parity::Odd
        } else {
            Parity::Even
        }
    }
}

impl std::fmt::Display for Parity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Parity::Odd => "odd",
            Parity::Even => "even",
        })
    }
}

/// A point recovered from `d` multilinear vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polarized {
    pub x_hat: Vec<f64>,
    /// `f_A(x_hat)`.
    pub value: f64,
    /// Chosen sign pattern; empty when the odd case fell back to a single
    /// input vector.
    pub beta: Vec<i8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HpCertificate {
    pub x_hat: Vec<f64>,
    pub value: f64,
    /// `F_A(xs)` of the multilinear certificate that was polarized.
    pub ml_value: f64,
    pub parity: Parity,
    pub seed: u64,
    pub beta: Vec<i8>,
    /// `d!·d^{−d}·ml_value` for odd `d`.
    pub guarantee: Option<f64>,
}

fn factorial(d: usize) -> f64 {
    (1..=d).map(|k| k as f64).product()
}

/// `d!·d^{−d}`.
pub fn odd_ratio(d: usize) -> f64 {
    factorial(d) / (d as f64).powi(d as i32)
}

fn check_inputs(a: &SymmetricTensor, xs: &[Vec<f64>]) -> Result<usize> {
    let d = a.order();
    if xs.len() != d {
        return Err(Error::shape(format!("order {d} needs {d} vectors, got {}", xs.len())));
    }
    if let Some(x) = xs.iter().find(|x| x.len() != a.nvars()) {
        return Err(Error::shape(format!(
            "vector of length {}, expected {}",
            x.len(),
            a.nvars()
        )));
    }
    if d > MAX_POLARIZATION_ORDER {
        return Err(Error::resource(format!(
            "sign enumeration limited to d <= {MAX_POLARIZATION_ORDER}, got {d}"
        )));
    }
    Ok(d)
}

fn signs(mask: u32, d: usize) -> Vec<f64> {
    (0..d).map(|i| if mask >> i & 1 == 0 { 1.0 } else { -1.0 }).collect()
}

fn combine(xs: &[Vec<f64>], coeffs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; xs[0].len()];
    for (x, c) in xs.iter().zip(coeffs) {
        for (o, v) in out.iter_mut().zip(x) {
            *o += c * v;
        }
    }
    out
}

fn as_beta(b: &[f64]) -> Vec<i8> {
    b.iter().map(|v| *v as i8).collect()
}

/// Uniform average of `(∏βᵢ)·f_A(Σⱼ βⱼxʲ)` over all `2^d` sign patterns,
/// which equals `d!·F_A(xs)`.
pub fn polarization_average(a: &SymmetricTensor, xs: &[Vec<f64>]) -> Result<f64> {
    let d = check_inputs(a, xs)?;
    let mut total = 0.0;
    for mask in 0..1u32 << d {
        let beta = signs(mask, d);
        let prod: f64 = beta.iter().product();
        total += prod * a.eval(&combine(xs, &beta));
    }
    Ok(total / f64::from(1u32 << d))
}

/// Odd `d`: over all `β`, the point `Σⱼ(∏_{i≠j}βᵢ)xʲ` normalized to the
/// unit sphere with the largest `f_A`.
///
/// Since `‖Σ…‖_p ≤ d`, the result satisfies
/// `f_A(x_hat) ≥ d!·d^{−d}·F_A(xs)` whenever `F_A(xs) > 0`. If every
/// combination vanishes, the best normalized input vector is returned.
pub fn polarize_odd(a: &SymmetricTensor, xs: &[Vec<f64>], p: Exponent) -> Result<Polarized> {
    let d = check_inputs(a, xs)?;
    if d % 2 == 0 {
        return Err(Error::domain(format!("polarize_odd needs odd d, got {d}")));
    }
    let p = p.value();
    let mut best: Option<Polarized> = None;
    let consider = |best: &mut Option<Polarized>, x: Vec<f64>, beta: Vec<i8>| {
        let norm = lp_norm(&x, p);
        if norm == 0.0 {
            return;
        }
        let x_hat: Vec<f64> = x.iter().map(|v| v / norm).collect();
        let value = a.eval(&x_hat);
        if best.as_ref().map_or(true, |b| value > b.value) {
            *best = Some(Polarized { x_hat, value, beta });
        }
    };
    for mask in 0..1u32 << d {
        let beta = signs(mask, d);
        let prod: f64 = beta.iter().product();
        let coeffs: Vec<f64> = beta.iter().map(|b| prod * b).collect();
        consider(&mut best, combine(xs, &coeffs), as_beta(&beta));
    }
    if best.is_none() {
        for x in xs {
            consider(&mut best, x.clone(), Vec::new());
        }
    }
    Ok(best.unwrap_or_else(|| Polarized {
        x_hat: vec![0.0; a.nvars()],
        value: 0.0,
        beta: Vec::new(),
    }))
}

/// Even `d`: over all `β` with `∏βᵢ = 1`, the point `(1/d)Σⱼβⱼxʲ` with the
/// largest `f_A`. The point is feasible without rescaling.
///
/// The input vectors themselves are also tried (with empty `beta`), and if
/// `f_A` is negative at every candidate the origin is returned with value 0.
pub fn polarize_even(a: &SymmetricTensor, xs: &[Vec<f64>], p: Exponent) -> Result<Polarized> {
    let d = check_inputs(a, xs)?;
    if d % 2 == 1 {
        return Err(Error::domain(format!("polarize_even needs even d, got {d}")));
    }
    let pv = p.value();
    if xs.iter().any(|x| lp_norm(x, pv) > 1.0 + FEASIBILITY_TOL) {
        return Err(Error::domain("polarize_even needs points in the unit ball"));
    }
    let mut best: Option<Polarized> = None;
    for mask in 0..1u32 << d {
        if mask.count_ones() % 2 == 1 {
            continue;
        }
        let beta = signs(mask, d);
        let coeffs: Vec<f64> = beta.iter().map(|b| b / d as f64).collect();
        let x_hat = combine(xs, &coeffs);
        let value = a.eval(&x_hat);
        if best.as_ref().map_or(true, |b| value > b.value) {
            best = Some(Polarized {
                x_hat,
                value,
                beta: as_beta(&beta),
            });
        }
    }
    let mut best = best.expect("beta = (1, …, 1) is always admissible");
    for x in xs {
        let value = a.eval(x);
        if value > best.value {
            best = Polarized {
                x_hat: x.clone(),
                value,
                beta: Vec::new(),
            };
        }
    }
    if best.value < 0.0 {
        best = Polarized {
            x_hat: vec![0.0; a.nvars()],
            value: 0.0,
            beta: Vec::new(),
        };
    }
    Ok(best)
}

/// Relax, solve the multilinear problem, polarize.
///
/// For odd `d` the guarantee `value ≥ d!·d^{−d}·ml_value` is checked and a
/// violation is reported as [`Error::Invariant`].
pub fn solve_hp(inst: &HpInstance, rng: &mut impl RngCore) -> Result<HpCertificate> {
    let ml = relax_to_ml(inst);
    let cert = solve_ml(&ml, rng)?;
    let d = inst.order();
    let parity = Parity::of(d);
    let pol = match parity {
        Parity::Odd => polarize_odd(&inst.tensor, &cert.xs, inst.p)?,
        Parity::Even => polarize_even(&inst.tensor, &cert.xs, inst.p)?,
    };
    let guarantee = (parity == Parity::Odd).then(|| odd_ratio(d) * cert.value);
    if let Some(g) = guarantee {
        if pol.value < g - 1e-9 * g.abs().max(1.0) {
            return Err(Error::Invariant(format!(
                "polarized value {} below guaranteed {g}",
                pol.value
            )));
        }
    }
    Ok(HpCertificate {
        x_hat: pol.x_hat,
        value: pol.value,
        ml_value: cert.value,
        parity,
        seed: inst.cfg.seed,
        beta: pol.beta,
        guarantee,
    })
}
