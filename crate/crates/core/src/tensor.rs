//! Dense order-`d` tensors and the multilinear forms they define.
//!
//! Entries are stored row-major: the last index varies fastest. An order-0
//! tensor has an empty `dims` list and exactly one entry.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of stored entries.
pub const DEFAULT_MAX_ENTRIES: usize = 10_000_000;

/// Relative tolerance used when a tensor is asserted super-symmetric.
pub const SUPERSYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

/// Number of entries for `dims`, or a resource error if it exceeds `cap`.
pub(crate) fn checked_len(dims: &[usize], cap: usize) -> Result<usize> {
    let mut len: usize = 1;
    for &n in dims {
        if n == 0 {
            return Err(Error::shape("every dimension must be >= 1"));
        }
        len = len
            .checked_mul(n)
            .filter(|l| *l <= cap)
            .ok_or_else(|| Error::resource(format!("tensor with dims {dims:?} exceeds {cap} entries")))?;
    }
    Ok(len)
}

impl Tensor {
    pub fn from_vec(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len = checked_len(&dims, DEFAULT_MAX_ENTRIES)?;
        if data.len() != len {
            return Err(Error::shape(format!(
                "dims {dims:?} need {len} entries, got {}",
                data.len()
            )));
        }
        Ok(Tensor { dims, data })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        Self::zeros_with_cap(dims, DEFAULT_MAX_ENTRIES)
    }

    pub fn zeros_with_cap(dims: Vec<usize>, cap: usize) -> Result<Self> {
        let len = checked_len(&dims, cap)?;
        Ok(Tensor {
            dims,
            data: vec![0.0; len],
        })
    }

    pub fn scalar(value: f64) -> Self {
        Tensor {
            dims: Vec::new(),
            data: vec![value],
        }
    }

    /// Builds a tensor by evaluating `f` at every multi-index (0-based).
    pub fn from_fn(dims: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let mut t = Self::zeros(dims)?;
        let mut idx = vec![0; t.order()];
        for k in 0..t.data.len() {
            t.data[k] = f(&idx);
            increment(&mut idx, &t.dims);
        }
        Ok(t)
    }

    /// Matrix from rows; every row must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if m == 0 || n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::shape("matrix rows must be non-empty and of equal length"));
        }
        Self::from_vec(vec![m, n], rows.concat())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == 0.0)
    }

    pub fn is_cubical(&self) -> bool {
        self.dims.windows(2).all(|w| w[0] == w[1])
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Value of an order-0 tensor.
    pub fn as_scalar(&self) -> Option<f64> {
        self.dims.is_empty().then(|| self.data[0])
    }

    pub fn strides(&self) -> Vec<usize> {
        strides(&self.dims)
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.order());
        idx.iter().zip(&self.dims).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub(crate) fn set(&mut self, idx: &[usize], value: f64) {
        let k = self.offset(idx);
        self.data[k] = value;
    }

    pub fn scaled(&self, alpha: f64) -> Tensor {
        Tensor {
            dims: self.dims.clone(),
            data: self.data.iter().map(|v| alpha * v).collect(),
        }
    }

    /// Entry `(i, j)` of an order-2 tensor.
    pub fn matrix_entry(&self, i: usize, j: usize) -> f64 {
        debug_assert_eq!(self.order(), 2);
        self.data[i * self.dims[1] + j]
    }

    /// Contracts a single index against `x`; the order drops by one.
    pub fn contract_axis(&self, axis: usize, x: &[f64]) -> Result<Tensor> {
        if axis >= self.order() {
            return Err(Error::shape(format!(
                "axis {axis} out of range for order {}",
                self.order()
            )));
        }
        let n = self.dims[axis];
        if x.len() != n {
            return Err(Error::shape(format!(
                "axis {axis} has length {n}, vector has {}",
                x.len()
            )));
        }
        let outer: usize = self.dims[..axis].iter().product();
        let inner: usize = self.dims[axis + 1..].iter().product();
        let mut out = vec![0.0; outer * inner];
        for o in 0..outer {
            let dst = &mut out[o * inner..(o + 1) * inner];
            let base = o * n * inner;
            for (k, &xk) in x.iter().enumerate() {
                if xk == 0.0 {
                    continue;
                }
                let src = &self.data[base + k * inner..base + (k + 1) * inner];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += xk * s;
                }
            }
        }
        let mut dims = self.dims.clone();
        dims.remove(axis);
        Ok(Tensor { dims, data: out })
    }

    /// Contracts every index listed in `spec`.
    pub fn contract(&self, spec: &ContractionSpec) -> Result<Tensor> {
        spec.validate(self)?;
        let mut t = self.clone();
        // descending positions keep the remaining axis numbers valid
        for (&axis, x) in spec.assignments.iter().rev() {
            t = t.contract_axis(axis, x)?;
        }
        Ok(t)
    }

    /// `F_A(x¹, …, x^d) = Σ a_{i₁…i_d} x¹_{i₁} ⋯ x^d_{i_d}`.
    pub fn eval_multilinear<V: AsRef<[f64]>>(&self, xs: &[V]) -> Result<f64> {
        if xs.len() != self.order() {
            return Err(Error::shape(format!(
                "order-{} form needs {} vectors, got {}",
                self.order(),
                self.order(),
                xs.len()
            )));
        }
        for (i, (x, &n)) in xs.iter().zip(&self.dims).enumerate() {
            if x.as_ref().len() != n {
                return Err(Error::shape(format!(
                    "slot {i} has length {n}, vector has {}",
                    x.as_ref().len()
                )));
            }
        }
        Ok(self.eval_multilinear_unchecked(xs))
    }

    /// Same as [`Tensor::eval_multilinear`] without shape checks; contracts
    /// from the last axis so every step is a dense mat-vec.
    pub(crate) fn eval_multilinear_unchecked<V: AsRef<[f64]>>(&self, xs: &[V]) -> f64 {
        let d = self.order();
        if d == 0 {
            return self.data[0];
        }
        let mut cur: Vec<f64>;
        let last = xs[d - 1].as_ref();
        let n = self.dims[d - 1];
        cur = self
            .data
            .chunks_exact(n)
            .map(|row| row.iter().zip(last).map(|(a, b)| a * b).sum())
            .collect();
        for axis in (0..d - 1).rev() {
            let x = xs[axis].as_ref();
            let n = self.dims[axis];
            cur = cur
                .chunks_exact(n)
                .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
                .collect();
        }
        cur[0]
    }

    /// `f_A(x) = F_A(x, …, x)`; fails unless the tensor is super-symmetric.
    pub fn eval_poly(&self, x: &[f64]) -> Result<f64> {
        if !self.is_supersymmetric(SUPERSYMMETRY_TOL) {
            return Err(Error::domain("eval_poly needs a super-symmetric tensor"));
        }
        let d = self.order();
        if d > 0 && x.len() != self.dims[0] {
            return Err(Error::shape(format!(
                "polynomial in {} variables, vector has {}",
                self.dims[0],
                x.len()
            )));
        }
        Ok(self.eval_multilinear_unchecked(&vec![x; d]))
    }

    /// True iff the tensor is cubical and every pair of entries whose indices
    /// are permutations of each other differ by at most `tol·(1 + max|a|)`.
    ///
    /// Works orbit by orbit: the spread (max − min) of the entries sharing a
    /// sorted multi-index equals the largest `|a_I − a_{π(I)}|` over all `π`.
    pub fn is_supersymmetric(&self, tol: f64) -> bool {
        if !self.is_cubical() {
            return false;
        }
        if self.order() <= 1 {
            return true;
        }
        let bound = tol * (1.0 + self.max_abs());
        let mut orbits: HashMap<Vec<usize>, (f64, f64)> = HashMap::new();
        let mut idx = vec![0; self.order()];
        let mut key = vec![0; self.order()];
        for &v in &self.data {
            key.copy_from_slice(&idx);
            key.sort_unstable();
            let e = orbits.entry(key.clone()).or_insert((v, v));
            e.0 = e.0.min(v);
            e.1 = e.1.max(v);
            if e.1 - e.0 > bound {
                return false;
            }
            increment(&mut idx, &self.dims);
        }
        true
    }
}

/// Row-major strides for `dims`.
pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Advances a row-major multi-index; wraps to all zeros after the last one.
pub(crate) fn increment(idx: &mut [usize], dims: &[usize]) {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < dims[k] {
            return;
        }
        idx[k] = 0;
    }
}

/// Vectors assigned to a subset of index positions (0-based).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContractionSpec {
    pub assignments: BTreeMap<usize, Vec<f64>>,
}

impl ContractionSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, position: usize, x: Vec<f64>) -> Self {
        self.assignments.insert(position, x);
        self
    }

    fn validate(&self, t: &Tensor) -> Result<()> {
        if self.assignments.is_empty() || self.assignments.len() > t.order() {
            return Err(Error::shape(format!(
                "contraction must assign between 1 and {} positions",
                t.order()
            )));
        }
        for (&pos, x) in &self.assignments {
            match t.dims.get(pos) {
                None => return Err(Error::shape(format!("position {pos} out of range"))),
                Some(&n) if n != x.len() => {
                    return Err(Error::shape(format!(
                        "position {pos} has length {n}, vector has {}",
                        x.len()
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// A tensor checked once to be super-symmetric, so polynomial evaluation
/// can skip the check.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricTensor(Tensor);

impl SymmetricTensor {
    pub fn new(t: Tensor, tol: f64) -> Result<Self> {
        if t.order() == 0 {
            return Err(Error::domain("order-0 tensor has no polynomial"));
        }
        if !t.is_supersymmetric(tol) {
            return Err(Error::domain("tensor is not super-symmetric"));
        }
        Ok(SymmetricTensor(t))
    }

    pub fn tensor(&self) -> &Tensor {
        &self.0
    }

    pub fn into_inner(self) -> Tensor {
        self.0
    }

    pub fn order(&self) -> usize {
        self.0.order()
    }

    /// Number of variables `n`.
    pub fn nvars(&self) -> usize {
        self.0.dims[0]
    }

    pub fn eval_poly(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.nvars() {
            return Err(Error::shape(format!(
                "polynomial in {} variables, vector has {}",
                self.nvars(),
                x.len()
            )));
        }
        Ok(self.eval(x))
    }

    pub(crate) fn eval(&self, x: &[f64]) -> f64 {
        self.0.eval_multilinear_unchecked(&vec![x; self.order()])
    }
}
