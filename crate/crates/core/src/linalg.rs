//! Symmetric matrices, Cholesky factorization, and jitter regularization.
//!
//! [`SymmetricMatrix`] stores only the lower triangle, so symmetry holds by
//! construction rather than by convention. [`CholeskyFactor`] is a hand-rolled
//! Cholesky-Crout factorization with a scale-invariant pivot test: a pivot at
//! or below `p * eps * max_diag` fails as not positive definite instead of
//! producing a factor contaminated by roundoff.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Dense symmetric matrix with packed lower-triangle storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    // Row-major lower triangle: entry (i, j) with j <= i lives at i(i+1)/2 + j.
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymmetricMatrix {
            dim,
            data: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds from a callback evaluated on the lower triangle (`i >= j`).
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..=i {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Imports a dense matrix, verifying squareness and symmetry.
    ///
    /// Asymmetry above `1e-12 * max|entry|` is rejected rather than silently
    /// averaged away.
    pub fn from_dense(m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "expected square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let scale = m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        let tol = 1e-12 * scale.max(1e-300);
        for i in 0..m.nrows() {
            for j in 0..i {
                if (m[(i, j)] - m[(j, i)]).abs() > tol {
                    return Err(Error::InvalidParameter(format!(
                        "matrix is not symmetric at ({i}, {j}): {} vs {}",
                        m[(i, j)],
                        m[(j, i)]
                    )));
                }
            }
        }
        Ok(Self::from_fn(m.nrows(), |i, j| m[(i, j)]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        self.data[r * (r + 1) / 2 + c]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        self.data[r * (r + 1) / 2 + c] = value;
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    /// Largest absolute diagonal entry.
    pub fn max_abs_diag(&self) -> f64 {
        (0..self.dim).fold(0.0_f64, |acc, i| acc.max(self.get(i, i).abs()))
    }

    /// Mean of the diagonal, the natural jitter scale for covariance input.
    pub fn mean_diag(&self) -> f64 {
        if self.dim == 0 {
            return 0.0;
        }
        (0..self.dim).map(|i| self.get(i, i)).sum::<f64>() / self.dim as f64
    }

    /// Returns `self + c * I` without mutating `self`.
    pub fn add_diag(&self, c: f64) -> SymmetricMatrix {
        let mut out = self.clone();
        for i in 0..self.dim {
            out.set(i, i, out.get(i, i) + c);
        }
        out
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }
}

/// Lower-triangular Cholesky factor `L` with `L L^T = M`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    l: DMatrix<f64>,
}

/// Factors a symmetric matrix, failing as [`Error::NotPositiveDefinite`]
/// when any pivot falls at or below `p * eps * max_diag`.
///
/// The threshold is scale-invariant: multiplying the matrix by a constant
/// scales every pivot and the threshold alike.
pub fn cholesky(m: &SymmetricMatrix) -> Result<CholeskyFactor> {
    let p = m.dim();
    let threshold = p as f64 * f64::EPSILON * m.max_abs_diag();
    let mut l = DMatrix::<f64>::zeros(p, p);
    for j in 0..p {
        let mut d = m.get(j, j);
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        // Written as a negated comparison so NaN pivots also fail.
        if !(d > threshold) {
            return Err(Error::NotPositiveDefinite(format!(
                "pivot {d:.3e} at index {j} is at or below threshold {threshold:.3e}"
            )));
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..p {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(CholeskyFactor { l })
}

impl CholeskyFactor {
    /// Wraps a lower-triangular matrix as a factor without checking it.
    ///
    /// For callers that already hold a factor from elsewhere, including the
    /// degenerate `L = 0` limit that [`cholesky`] itself refuses to produce.
    pub fn from_lower_unchecked(l: DMatrix<f64>) -> Self {
        assert_eq!(l.nrows(), l.ncols(), "factor must be square");
        CholeskyFactor { l }
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// The lower-triangular factor.
    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// Solves `L x = b` by forward substitution.
    pub fn solve_lower(&self, b: &DVector<f64>) -> DVector<f64> {
        let p = self.dim();
        let mut x = b.clone();
        for i in 0..p {
            for k in 0..i {
                let v = x[k];
                x[i] -= self.l[(i, k)] * v;
            }
            x[i] /= self.l[(i, i)];
        }
        x
    }

    /// Solves `L^T x = b` by backward substitution.
    pub fn solve_upper(&self, b: &DVector<f64>) -> DVector<f64> {
        let p = self.dim();
        let mut x = b.clone();
        for i in (0..p).rev() {
            for k in (i + 1)..p {
                let v = x[k];
                x[i] -= self.l[(k, i)] * v;
            }
            x[i] /= self.l[(i, i)];
        }
        x
    }

    /// Solves `M x = b` where `M = L L^T`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.solve_upper(&self.solve_lower(b))
    }

    /// Solves `M X = B` column by column.
    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(b.nrows(), b.ncols());
        for j in 0..b.ncols() {
            let col = DVector::from_column_slice(b.column(j).as_slice());
            out.set_column(j, &self.solve(&col));
        }
        out
    }

    /// `M^{-1}`, formed by solving against the identity.
    pub fn inverse(&self) -> SymmetricMatrix {
        let p = self.dim();
        let inv = self.solve_matrix(&DMatrix::identity(p, p));
        SymmetricMatrix::from_fn(p, |i, j| 0.5 * (inv[(i, j)] + inv[(j, i)]))
    }

    /// `L L^T`, for reconstruction checks.
    pub fn reconstruct(&self) -> SymmetricMatrix {
        let m = &self.l * self.l.transpose();
        SymmetricMatrix::from_fn(self.dim(), |i, j| m[(i, j)])
    }
}

/// Default number of jitter doublings attempted before giving up.
const MAX_JITTER_DOUBLINGS: u32 = 60;

/// Result of [`regularize_to_pd`]: the factor of `m + c I` and the jitter
/// `c` that was needed (`0.0` when the input was already positive definite).
#[derive(Debug, Clone)]
pub struct Regularized {
    pub factor: CholeskyFactor,
    pub jitter: f64,
}

/// Factors `m + c I` for the smallest `c` in `{0, j0, 2 j0, 4 j0, ...}` that
/// passes the strict Cholesky test.
///
/// `jitter_start` defaults to `1e-8 * mean_diag`, the natural scale for a
/// covariance matrix. Fails as [`Error::RegularizationFailed`] after 60
/// doublings, which covers any finite matrix whose diagonal is sane.
pub fn regularize_to_pd(m: &SymmetricMatrix, jitter_start: Option<f64>) -> Result<Regularized> {
    if let Ok(factor) = cholesky(m) {
        return Ok(Regularized { factor, jitter: 0.0 });
    }
    let j0 = jitter_start.unwrap_or_else(|| 1e-8 * m.mean_diag().abs().max(f64::MIN_POSITIVE));
    let mut jitter = j0;
    for _ in 0..MAX_JITTER_DOUBLINGS {
        if let Ok(factor) = cholesky(&m.add_diag(jitter)) {
            return Ok(Regularized { factor, jitter });
        }
        jitter *= 2.0;
    }
    Err(Error::RegularizationFailed {
        attempts: MAX_JITTER_DOUBLINGS,
    })
}
