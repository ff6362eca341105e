//! Sparse symmetric matrices stored as upper-triangle coordinate triplets,
//! compiled to a full-pattern CSR layout for fast repeated matrix-vector
//! products.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while validating sparse matrix data.
#[derive(Debug, Error)]
pub enum SparseError {
    /// An entry's row or column index falls outside `[0, n)`.
    #[error("entry ({row}, {col}) out of bounds for dimension {n}")]
    IndexOutOfBounds { row: usize, col: usize, n: usize },
    /// An entry lies strictly below the diagonal.
    #[error("entry ({row}, {col}) lies below the diagonal; store the upper triangle only")]
    LowerTriangle { row: usize, col: usize },
    /// The same (row, col) position appears more than once.
    #[error("duplicate entry at ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },
    /// An entry's value is NaN or infinite.
    #[error("non-finite value {value} at ({row}, {col})")]
    NonFiniteValue { row: usize, col: usize, value: f64 },
}

/// A real symmetric `n x n` matrix stored sparsely.
///
/// Only the upper triangle (`row <= col`) is kept as coordinate triplets; the
/// symmetric completion is implicit. Construction validates indices, rejects
/// duplicates, and requires finite values. A compiled full-pattern CSR form
/// (both triangles materialized) backs the matrix-vector product.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawSparse", into = "RawSparse")]
pub struct SparseSymMatrix {
    n: usize,
    /// Upper-triangle triplets, sorted lexicographically by (row, col).
    entries: Vec<(usize, usize, f64)>,
    /// CSR row pointers over the full (symmetrized) pattern.
    #[serde(skip)]
    row_ptr: Vec<usize>,
    /// CSR column indices over the full pattern.
    #[serde(skip)]
    col_idx: Vec<usize>,
    /// CSR values over the full pattern.
    #[serde(skip)]
    values: Vec<f64>,
}

/// Serialization proxy: dimension plus sorted upper-triangle triplets.
#[derive(Serialize, Deserialize)]
struct RawSparse {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TryFrom<RawSparse> for SparseSymMatrix {
    type Error = SparseError;

    fn try_from(raw: RawSparse) -> Result<Self, SparseError> {
        SparseSymMatrix::from_triplets(raw.n, raw.entries)
    }
}

impl From<SparseSymMatrix> for RawSparse {
    fn from(m: SparseSymMatrix) -> Self {
        RawSparse { n: m.n, entries: m.entries }
    }
}

impl SparseSymMatrix {
    /// Builds a matrix from upper-triangle coordinate triplets.
    ///
    /// # Arguments
    /// * `n` - matrix dimension.
    /// * `triplets` - `(row, col, value)` entries with `row <= col`; order is
    ///   irrelevant, duplicates are rejected.
    ///
    /// # Errors
    /// Returns a [`SparseError`] if an index is out of bounds, an entry lies
    /// below the diagonal, a position repeats, or a value is not finite.
    pub fn from_triplets(
        n: usize,
        triplets: Vec<(usize, usize, f64)>,
    ) -> Result<Self, SparseError> {
        let mut entries = triplets;
        for &(row, col, value) in &entries {
            if row >= n || col >= n {
                return Err(SparseError::IndexOutOfBounds { row, col, n });
            }
            if row > col {
                return Err(SparseError::LowerTriangle { row, col });
            }
            if !value.is_finite() {
                return Err(SparseError::NonFiniteValue { row, col, value });
            }
        }
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(SparseError::DuplicateEntry { row: w[0].0, col: w[0].1 });
            }
        }
        let (row_ptr, col_idx, values) = compile_csr(n, &entries);
        Ok(Self { n, entries, row_ptr, col_idx, values })
    }

    /// The zero matrix of dimension `n`.
    pub fn zeros(n: usize) -> Self {
        Self::from_triplets(n, Vec::new()).expect("empty triplet list is always valid")
    }

    /// Builds a diagonal matrix from its diagonal entries.
    pub fn from_diagonal(diag: &[f64]) -> Result<Self, SparseError> {
        let triplets = diag
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i, i, v))
            .collect();
        Self::from_triplets(diag.len(), triplets)
    }

    /// The identity matrix of dimension `n`.
    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n]).expect("identity entries are finite")
    }

    /// Matrix dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored upper-triangle entries.
    pub fn nnz_upper(&self) -> usize {
        self.entries.len()
    }

    /// The stored upper-triangle triplets, sorted lexicographically.
    pub fn triplets(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    /// Computes `y = A x` using the compiled full-pattern CSR layout.
    ///
    /// # Panics
    /// Panics if `x.len() != n` or `y.len() != n`.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n, "input length must equal dimension");
        assert_eq!(y.len(), self.n, "output length must equal dimension");
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
    }

    /// Computes `A x` into a fresh vector.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    /// Accumulates `y += s * A x` without allocating.
    pub fn matvec_add_scaled(&self, x: &[f64], s: f64, y: &mut [f64]) {
        assert_eq!(x.len(), self.n, "input length must equal dimension");
        assert_eq!(y.len(), self.n, "output length must equal dimension");
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi += s * acc;
        }
    }

    /// The quadratic form `x^T A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n, "input length must equal dimension");
        // Each upper-triangle entry (i, j, v) contributes v * x_i * x_j once
        // when i == j and twice (symmetric pair) when i < j.
        let mut acc = 0.0;
        for &(i, j, v) in &self.entries {
            let term = v * x[i] * x[j];
            acc += if i == j { term } else { 2.0 * term };
        }
        acc
    }

    /// The linear combination `a * self + b * other` (matching dimensions).
    ///
    /// # Panics
    /// Panics if dimensions differ.
    pub fn linear_combination(&self, a: f64, other: &Self, b: f64) -> Self {
        assert_eq!(self.n, other.n, "dimensions must match");
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(
            self.entries.len() + other.entries.len(),
        );
        let (mut p, mut q) = (0, 0);
        while p < self.entries.len() || q < other.entries.len() {
            let take_left = match (self.entries.get(p), other.entries.get(q)) {
                (Some(&(ri, ci, _)), Some(&(rj, cj, _))) => {
                    if (ri, ci) == (rj, cj) {
                        let v = a * self.entries[p].2 + b * other.entries[q].2;
                        merged.push((ri, ci, v));
                        p += 1;
                        q += 1;
                        continue;
                    }
                    (ri, ci) < (rj, cj)
                }
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (None, None) => break,
            };
            if take_left {
                let (r, c, v) = self.entries[p];
                merged.push((r, c, a * v));
                p += 1;
            } else {
                let (r, c, v) = other.entries[q];
                merged.push((r, c, b * v));
                q += 1;
            }
        }
        merged.retain(|&(_, _, v)| v != 0.0);
        Self::from_triplets(self.n, merged).expect("combination of valid matrices is valid")
    }

    /// Scales every entry by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let triplets = self
            .entries
            .iter()
            .map(|&(r, c, v)| (r, c, s * v))
            .filter(|&(_, _, v)| v != 0.0)
            .collect();
        Self::from_triplets(self.n, triplets).expect("scaling preserves validity")
    }

    /// Materializes the full dense symmetric matrix. Intended for small
    /// dimensions (reference computations and tests).
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for &(i, j, v) in &self.entries {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }

    /// Builds a sparse matrix from the upper triangle of a dense symmetric
    /// matrix, dropping exact zeros.
    pub fn from_dense(m: &DMatrix<f64>) -> Result<Self, SparseError> {
        assert_eq!(m.nrows(), m.ncols(), "matrix must be square");
        let n = m.nrows();
        let mut triplets = Vec::new();
        for i in 0..n {
            for j in i..n {
                let v = m[(i, j)];
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n, triplets)
    }
}

/// Expands sorted upper-triangle triplets into a full-pattern CSR layout.
fn compile_csr(
    n: usize,
    entries: &[(usize, usize, f64)],
) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
    let mut counts = vec![0usize; n + 1];
    for &(i, j, _) in entries {
        counts[i + 1] += 1;
        if i != j {
            counts[j + 1] += 1;
        }
    }
    for k in 0..n {
        counts[k + 1] += counts[k];
    }
    let row_ptr = counts;
    let total = row_ptr[n];
    let mut col_idx = vec![0usize; total];
    let mut values = vec![0.0f64; total];
    let mut next = row_ptr.clone();
    for &(i, j, v) in entries {
        col_idx[next[i]] = j;
        values[next[i]] = v;
        next[i] += 1;
        if i != j {
            col_idx[next[j]] = i;
            values[next[j]] = v;
            next[j] += 1;
        }
    }
    (row_ptr, col_idx, values)
}
