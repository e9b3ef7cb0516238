//! Sparse/dense vector arithmetic, kernels, Gram matrices and an SPD solver.

use std::borrow::Borrow;
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NumericsError {
    #[error("sparse index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("sparse entries must have strictly increasing indices and finite non-zero values")]
    MalformedSparse,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("matrix not positive definite: pivot {value:e} at row {row}")]
    NotPositiveDefinite { row: usize, value: f64 },
    #[error("rbf sigma must be finite and > 0, got {0}")]
    BadSigma(f64),
}

/// Sparse vector stored as `(index, value)` pairs with strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    /// Validates ordering and drops nothing: zero values are rejected.
    pub fn new(entries: Vec<(usize, f64)>) -> Result<Self, NumericsError> {
        let sorted = entries.windows(2).all(|w| w[0].0 < w[1].0);
        let finite = entries.iter().all(|&(_, v)| v.is_finite() && v != 0.0);
        if sorted && finite {
            Ok(SparseVector { entries })
        } else {
            Err(NumericsError::MalformedSparse)
        }
    }

    /// Builds from a dense slice, skipping zeros.
    pub fn from_dense(values: &[f64]) -> Self {
        SparseVector {
            entries: values
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(i, &v)| (i, v))
                .collect(),
        }
    }

    pub(crate) fn from_sorted_unchecked(entries: Vec<(usize, f64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        SparseVector { entries }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.1)
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// One past the largest stored index (0 when empty).
    pub fn min_dim(&self) -> usize {
        self.entries.last().map_or(0, |e| e.0 + 1)
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|e| e.1 * e.1).sum()
    }

    /// `self · dense`. Panics if an index exceeds `dense.len()`; use [`sparse_dot`]
    /// for a checked version.
    #[inline]
    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * dense[i]).sum()
    }

    /// `dense += scale * self`.
    #[inline]
    pub fn axpy_into(&self, scale: f64, dense: &mut [f64]) {
        for &(i, v) in &self.entries {
            dense[i] += scale * v;
        }
    }

    /// Sparse-sparse inner product by merging sorted indices.
    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j) = (0, 0);
        let mut acc = 0.0;
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
            }
        }
        acc
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        self.axpy_into(1.0, &mut out);
        out
    }
}

/// Checked `a · b` for a dense `b`.
pub fn sparse_dot(a: &SparseVector, b: &[f64]) -> Result<f64, NumericsError> {
    if a.min_dim() > b.len() {
        return Err(NumericsError::IndexOutOfRange {
            index: a.min_dim() - 1,
            dim: b.len(),
        });
    }
    Ok(a.dot_dense(b))
}

/// Squared Euclidean distance by merging the sorted index lists.
pub fn sparse_dist_sq(a: &SparseVector, b: &SparseVector) -> f64 {
    let (a, b) = (a.entries(), b.entries());
    let (mut i, mut j) = (0, 0);
    let mut acc = 0.0;
    while i < a.len() || j < b.len() {
        let d = match (a.get(i), b.get(j)) {
            (Some(&(ia, va)), Some(&(ib, vb))) if ia == ib => {
                i += 1;
                j += 1;
                va - vb
            }
            (Some(&(ia, va)), Some(&(ib, _))) if ia < ib => {
                i += 1;
                va
            }
            (Some(_), Some(&(_, vb))) => {
                j += 1;
                vb
            }
            (Some(&(_, va)), None) => {
                i += 1;
                va
            }
            (None, Some(&(_, vb))) => {
                j += 1;
                vb
            }
            (None, None) => unreachable!(),
        };
        acc += d * d;
    }
    acc
}

pub fn norm(w: &[f64]) -> f64 {
    w.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    Linear,
    Rbf { sigma: f64 },
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::Rbf { sigma: 1.0 }
    }
}

impl KernelSpec {
    pub fn validate(&self) -> Result<(), NumericsError> {
        match *self {
            KernelSpec::Rbf { sigma } if !(sigma.is_finite() && sigma > 0.0) => {
                Err(NumericsError::BadSigma(sigma))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn eval(&self, a: &SparseVector, b: &SparseVector) -> f64 {
        match *self {
            KernelSpec::Linear => a.dot(b),
            KernelSpec::Rbf { sigma } => (-sparse_dist_sq(a, b) / (2.0 * sigma * sigma)).exp(),
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Linear => f.write_str("linear"),
            KernelSpec::Rbf { sigma } => write!(f, "rbf({sigma})"),
        }
    }
}

pub fn kernel_eval(spec: KernelSpec, a: &SparseVector, b: &SparseVector) -> f64 {
    spec.eval(a, b)
}

/// Dense symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

pub type GramMatrix = SymMatrix;

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds from rows; the caller guarantees symmetry (checked in debug builds).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, NumericsError> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(NumericsError::DimensionMismatch(r.len(), n));
            }
            data.extend_from_slice(r);
        }
        let m = SymMatrix { n, data };
        debug_assert!(m.is_symmetric());
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Principal submatrix on `idx`, with `shift` added to the diagonal.
    pub fn principal(&self, idx: &[usize], shift: f64) -> SymMatrix {
        let m = idx.len();
        let mut data = Vec::with_capacity(m * m);
        for &i in idx {
            let row = self.row(i);
            data.extend(idx.iter().map(|&j| row[j]));
        }
        let mut out = SymMatrix { n: m, data };
        for k in 0..m {
            out.data[k * m + k] += shift;
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Gram matrix `K[i][j] = spec(xs[i], xs[j])`. Rows are filled in parallel; each entry is
/// computed once on the upper triangle and mirrored, so the result is independent of
/// scheduling.
pub fn gram<T: Borrow<SparseVector> + Sync>(spec: KernelSpec, xs: &[T]) -> GramMatrix {
    let n = xs.len();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = xs[i].borrow();
            (i..n).map(|j| spec.eval(xi, xs[j].borrow())).collect()
        })
        .collect();
    let mut k = SymMatrix::zeros(n);
    for (i, row) in upper.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            k.set(i, i + off, v);
        }
    }
    k
}

/// Lower-triangular Cholesky factor `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn factor(a: &SymMatrix) -> Result<Self, NumericsError> {
        let n = a.n();
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = a.get(i, j);
                let (li, lj) = (&l[i * n..i * n + j], &l[j * n..j * n + j]);
                s -= li.iter().zip(lj).map(|(x, y)| x * y).sum::<f64>();
                if i == j {
                    if !(s.is_finite() && s > 0.0) {
                        return Err(NumericsError::NotPositiveDefinite { row: i, value: s });
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Ok(Cholesky { n, l })
    }

    /// Diagonal of `L`; squares are the pivots of the factorization.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.l[i * self.n + i]).collect()
    }

    pub fn solve(&self, y: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut z = y.to_vec();
        for i in 0..n {
            let s: f64 = (0..i).map(|k| self.l[i * n + k] * z[k]).sum();
            z[i] = (z[i] - s) / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|k| self.l[k * n + i] * z[k]).sum();
            z[i] = (z[i] - s) / self.l[i * n + i];
        }
        z
    }
}

/// Solves `A x = y` for symmetric positive definite `A`, with one step of iterative
/// refinement.
pub fn solve_spd(a: &SymMatrix, y: &[f64]) -> Result<Vec<f64>, NumericsError> {
    if a.n() != y.len() {
        return Err(NumericsError::DimensionMismatch(a.n(), y.len()));
    }
    let chol = Cholesky::factor(a)?;
    let mut x = chol.solve(y);
    let ax = a.mul_vec(&x);
    let r: Vec<f64> = y.iter().zip(&ax).map(|(a, b)| a - b).collect();
    let dx = chol.solve(&r);
    for (xi, d) in x.iter_mut().zip(dx) {
        *xi += d;
    }
    Ok(x)
}

/// `‖A x − y‖∞`.
pub fn residual_inf(a: &SymMatrix, x: &[f64], y: &[f64]) -> f64 {
    a.mul_vec(x)
        .iter()
        .zip(y)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max)
}
