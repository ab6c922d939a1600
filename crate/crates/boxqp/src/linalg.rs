//! Minimal dense linear algebra: vectors, symmetric matrices, a general
//! rectangular matrix, and the positive-definite factor/solve used by the
//! solver's compact Newton system.
//!
//! Everything is 64-bit floating point, dense, row-major. Values are
//! immutable after construction and safe to share across threads.

use thiserror::Error;

/// Dense column vector. Plain `Vec<f64>` so callers can use iterators freely.
pub type DenseVector = Vec<f64>;

/// Factorization pivots at or below this floor are treated as a breakdown.
pub const PIVOT_FLOOR: f64 = 1e-300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    /// A factorization pivot fell to `PIVOT_FLOOR` or below: the matrix is
    /// not numerically positive definite.
    #[error("matrix not positive definite: pivot {pivot:e} at index {index}")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

/// Dense symmetric matrix, full row-major storage of order×order entries.
///
/// Symmetry is enforced at construction by mirroring the lower triangle,
/// so `get(i, j) == get(j, i)` holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    order: usize,
    entries: Vec<f64>,
}

impl SymMatrix {
    /// Builds from row-major entries, mirroring the lower triangle onto the
    /// upper so the result is exactly symmetric.
    pub fn from_rows(order: usize, mut entries: Vec<f64>) -> Self {
        assert_eq!(entries.len(), order * order, "entry count must be order^2");
        for i in 0..order {
            for j in (i + 1)..order {
                entries[i * order + j] = entries[j * order + i];
            }
        }
        SymMatrix { order, entries }
    }

    pub fn zeros(order: usize) -> Self {
        SymMatrix {
            order,
            entries: vec![0.0; order * order],
        }
    }

    pub fn identity(order: usize) -> Self {
        let mut m = Self::zeros(order);
        for i in 0..order {
            m.entries[i * order + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            m.entries[i * diag.len() + i] = *d;
        }
        m
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.order + j]
    }

    /// Sets entry (i, j) and its mirror (j, i).
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.entries[i * self.order + j] = value;
        self.entries[j * self.order + i] = value;
    }

    pub fn mul_vec(&self, x: &[f64]) -> DenseVector {
        assert_eq!(x.len(), self.order);
        let n = self.order;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let row = &self.entries[i * n..(i + 1) * n];
            y[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        y
    }

    /// Returns `c * self`.
    pub fn scaled(&self, c: f64) -> SymMatrix {
        SymMatrix {
            order: self.order,
            entries: self.entries.iter().map(|e| c * e).collect(),
        }
    }

    /// Returns `self + diag(d)`.
    pub fn add_diag(&self, d: &[f64]) -> SymMatrix {
        assert_eq!(d.len(), self.order);
        let mut out = self.clone();
        for i in 0..self.order {
            out.entries[i * self.order + i] += d[i];
        }
        out
    }

    /// Largest absolute entry (0 for an empty matrix).
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.abs()))
    }
}

/// Dense general matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            entries: vec![0.0; rows * cols],
        }
    }

    pub fn identity(order: usize) -> Self {
        let mut m = Self::zeros(order, order);
        for i in 0..order {
            m.entries[i * order + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, entries: Vec<f64>) -> Self {
        assert_eq!(entries.len(), rows * cols);
        Matrix { rows, cols, entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.entries[i * self.cols + j] = value;
    }

    /// Copies `block` into this matrix with its top-left corner at (i, j).
    pub fn set_block(&mut self, i: usize, j: usize, block: &Matrix) {
        assert!(i + block.rows <= self.rows && j + block.cols <= self.cols);
        for r in 0..block.rows {
            for c in 0..block.cols {
                self.set(i + r, j + c, block.get(r, c));
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> DenseVector {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = &self.entries[i * self.cols..(i + 1) * self.cols];
            y[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        y
    }

    pub fn mul_mat(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows);
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.entries[i * rhs.cols + j] += a * rhs.get(k, j);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    /// Reinterprets a square matrix as symmetric by mirroring the lower
    /// triangle; entry (i, j) with i < j is discarded.
    pub fn into_sym(self) -> SymMatrix {
        assert_eq!(self.rows, self.cols);
        SymMatrix::from_rows(self.rows, self.entries)
    }
}

/// Lower-triangular Cholesky factor of a positive-definite `SymMatrix`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    order: usize,
    lower: Vec<f64>,
}

/// Factors `a = L·Lᵀ` without pivoting.
///
/// Fails with `NotPositiveDefinite` as soon as a pivot falls to
/// `PIVOT_FLOOR` or below, so breakdown surfaces as a typed error rather
/// than NaN propagation.
pub fn cholesky(a: &SymMatrix) -> Result<CholeskyFactor, LinalgError> {
    let n = a.order();
    let mut l = a.entries().to_vec();
    for i in 0..n {
        for j in 0..=i {
            let mut sum = l[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(sum > PIVOT_FLOOR) {
                    return Err(LinalgError::NotPositiveDefinite { index: i, pivot: sum });
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
        for j in (i + 1)..n {
            l[i * n + j] = 0.0;
        }
    }
    Ok(CholeskyFactor { order: n, lower: l })
}

impl CholeskyFactor {
    /// Solves `A·x = b` using the stored factor.
    pub fn solve(&self, b: &[f64]) -> DenseVector {
        assert_eq!(b.len(), self.order);
        let n = self.order;
        let l = &self.lower;
        let mut x = b.to_vec();
        // forward: L y = b
        for i in 0..n {
            let mut sum = x[i];
            for k in 0..i {
                sum -= l[i * n + k] * x[k];
            }
            x[i] = sum / l[i * n + i];
        }
        // backward: Lᵀ x = y
        for i in (0..n).rev() {
            let mut sum = x[i];
            for k in (i + 1)..n {
                sum -= l[k * n + i] * x[k];
            }
            x[i] = sum / l[i * n + i];
        }
        x
    }
}

/// Solves `A·x = b` for symmetric positive-definite `A`.
pub fn spd_solve(a: &SymMatrix, b: &[f64]) -> Result<DenseVector, LinalgError> {
    assert_eq!(a.order(), b.len(), "system dimensions must agree");
    Ok(cholesky(a)?.solve(b))
}

/// Elementwise (Hadamard) product of two equal-length vectors.
pub fn hadamard(a: &[f64], b: &[f64]) -> Result<DenseVector, LinalgError> {
    if a.len() != b.len() {
        return Err(LinalgError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| x * y).collect())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}
