//! L_p exponents, vector norms and Hölder duality.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An exponent `p ∈ [1, ∞]` together with its conjugate `q = p/(p-1)`.
///
/// When the exponent is parsed from a rational `a/b` the conjugate is
/// formed as `a/(a-b)` from the integers directly, so `1/p + 1/q = 1`
/// holds to a single rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent {
    p: f64,
    q: f64,
    ratio: Option<(u64, u64)>,
}

impl Exponent {
    pub fn infinity() -> Self {
        Exponent {
            p: f64::INFINITY,
            q: 1.0,
            ratio: None,
        }
    }

    pub fn finite(p: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::domain(format!("exponent must be >= 1, got {p}")));
        }
        let q = if p == 1.0 { f64::INFINITY } else { p / (p - 1.0) };
        Ok(Exponent { p, q, ratio: None })
    }

    pub fn rational(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num < den {
            return Err(Error::domain(format!("exponent {num}/{den} must be >= 1")));
        }
        let p = num as f64 / den as f64;
        let q = if num == den {
            f64::INFINITY
        } else {
            num as f64 / (num - den) as f64
        };
        Ok(Exponent {
            p,
            q,
            ratio: Some((num, den)),
        })
    }

    pub fn value(&self) -> f64 {
        self.p
    }

    pub fn conjugate(&self) -> f64 {
        self.q
    }

    pub fn is_infinite(&self) -> bool {
        self.p.is_infinite()
    }

    /// Solvers in this crate work on `p ∈ (2, ∞]`.
    pub fn require_above_two(&self) -> Result<()> {
        if self.p > 2.0 {
            Ok(())
        } else {
            Err(Error::domain(format!("solvers require p in (2, inf], got {}", self)))
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.ratio {
            _ if self.p.is_infinite() => f.write_str("inf"),
            Some((a, 1)) => write!(f, "{a}"),
            Some((a, b)) => write!(f, "{a}/{b}"),
            None => write!(f, "{:?}", self.p),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
            return Ok(Exponent::infinity());
        }
        if let Some((a, b)) = s.split_once('/') {
            let num = a
                .trim()
                .parse::<u64>()
                .map_err(|e| Error::Parse(format!("bad exponent numerator {a:?}: {e}")))?;
            let den = b
                .trim()
                .parse::<u64>()
                .map_err(|e| Error::Parse(format!("bad exponent denominator {b:?}: {e}")))?;
            return Exponent::rational(num, den);
        }
        if let Ok(int) = s.parse::<u64>() {
            return Exponent::rational(int, 1);
        }
        let p = s
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("bad exponent {s:?}: {e}")))?;
        if p.is_infinite() && p > 0.0 {
            return Ok(Exponent::infinity());
        }
        Exponent::finite(p)
    }
}

impl Serialize for Exponent {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `‖x‖_p`, with `p = ∞` giving the max-norm.
pub fn lp_norm(x: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return x.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    if p == 1.0 {
        return x.iter().map(|v| v.abs()).sum();
    }
    if p == 2.0 {
        return x.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    // scale by the max entry so large p does not overflow
    let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let sum: f64 = x.iter().map(|v| (v.abs() / scale).powf(p)).sum();
    scale * sum.powf(1.0 / p)
}

/// Rescales `x` in place so that `‖x‖_p = 1`. Returns the old norm.
pub fn normalize_lp(x: &mut [f64], p: f64) -> f64 {
    let n = lp_norm(x, p);
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
    n
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The unit-`L_p` vector `x` with `xᵀy = ‖y‖_q` where `p = q/(q-1)`.
///
/// Only `q ∈ [1, 2)` is accepted, which is the range conjugate to the
/// solver exponents. `q = 1` yields the sign vector.
pub fn holder_dual(y: &[f64], q: f64) -> Result<Vec<f64>> {
    if !(1.0..2.0).contains(&q) {
        return Err(Error::domain(format!("holder_dual needs q in [1, 2), got {q}")));
    }
    holder_dual_any(y, q).ok_or_else(|| Error::domain("holder_dual of the zero vector"))
}

/// Hölder dual for any `q ∈ [1, ∞]`. Returns `None` for the zero vector.
pub(crate) fn holder_dual_any(y: &[f64], q: f64) -> Option<Vec<f64>> {
    if y.iter().all(|v| *v == 0.0) {
        return None;
    }
    if q == 1.0 {
        return Some(y.iter().map(|v| sign0(*v)).collect());
    }
    if q.is_infinite() {
        // p = 1: put all the mass on one largest coordinate
        let (k, _) = y.iter().enumerate().fold(
            (0, 0.0),
            |(bk, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bk, bv) },
        );
        let mut x = vec![0.0; y.len()];
        x[k] = sign0(y[k]);
        return Some(x);
    }
    let nq = lp_norm(y, q);
    let mut x: Vec<f64> = y.iter().map(|v| sign0(*v) * (v.abs() / nq).powf(q - 1.0)).collect();
    // snap away the last ulp of drift in the p-norm
    let p = q / (q - 1.0);
    normalize_lp(&mut x, p);
    Some(x)
}

#[inline]
pub(crate) fn sign0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}
