//! Dense complex linear algebra for small matrices.
//!
//! Everything here works on `nalgebra` dynamic matrices of `Complex<f64>`.
//! Bipartite operators on `C^n ⊗ C^m` use the row-major tensor index
//! `k * m + i` for the basis vector `e_k ⊗ e_i`.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative singular-value cutoff used by [`span_rank`] when no tolerance is given.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Hermiticity defect accepted (and symmetrized away) by [`HermMatrix::new`].
pub const HERMITIAN_TOL: f64 = 1e-12;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Largest entrywise deviation `|A - A*|`. Non-square input returns infinity.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    if !a.is_square() {
        return f64::INFINITY;
    }
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// A square complex matrix known to be Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct HermMatrix(CMatrix);

impl HermMatrix {
    /// Validates and symmetrizes `a`.
    ///
    /// Defects up to `1e-12 * max(1, max|a_ij|)` are removed by taking
    /// `(A + A*)/2`; anything larger is rejected.
    pub fn new(a: CMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "expected a square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let defect = hermitian_defect(&a);
        let scale = a.iter().fold(1.0f64, |acc, z| acc.max(z.norm()));
        if defect > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian { defect });
        }
        Ok(hermitian_part(&a))
    }

    pub fn identity(dim: usize) -> Self {
        HermMatrix(CMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        HermMatrix(CMatrix::zeros(dim, dim))
    }

    /// Real diagonal matrix.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        HermMatrix(CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                c64(diag[i], 0.0)
            } else {
                C64::default()
            }
        }))
    }

    /// Rank-one projector `v v*` (not normalized).
    pub fn projector(v: &CVector) -> Self {
        HermMatrix(v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn scale(&self, s: f64) -> Self {
        HermMatrix(self.0.map(|z| z * s))
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &HermMatrix, b: f64) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        HermMatrix(self.0.zip_map(&other.0, |x, y| x * a + y * b))
    }
}

impl Deref for HermMatrix {
    type Target = CMatrix;

    fn deref(&self) -> &CMatrix {
        &self.0
    }
}

/// `(A + A*) / 2`, unconditionally. For products that are Hermitian in exact
/// arithmetic (eigen-reconstructions, `V* X V`).
pub fn hermitian_part(a: &CMatrix) -> HermMatrix {
    let n = a.nrows();
    let mut out = a.clone();
    for i in 0..n {
        out[(i, i)] = c64(a[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let z = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            out[(i, j)] = z;
            out[(j, i)] = z.conj();
        }
    }
    HermMatrix(out)
}

/// Splitting of a space as `C^n ⊗ C^m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BipartiteDims {
    pub n: usize,
    pub m: usize,
}

impl BipartiteDims {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidParameter(format!(
                "bipartite dimensions must be positive, got ({n}, {m})"
            )));
        }
        Ok(BipartiteDims { n, m })
    }

    pub fn total(&self) -> usize {
        self.n * self.m
    }

    fn check(&self, a: &CMatrix) -> Result<()> {
        let d = self.total();
        if a.nrows() != d || a.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "expected a {d}x{d} operator on C^{} ⊗ C^{}, got {}x{}",
                self.n,
                self.m,
                a.nrows(),
                a.ncols()
            )));
        }
        Ok(())
    }
}

/// Kronecker product: `(A⊗B)[i*rB + k, j*cB + l] = A[i,j] * B[k,l]`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = CMatrix::zeros(ra * rb, ca * cb);
    for i in 0..ra {
        for j in 0..ca {
            let aij = a[(i, j)];
            if aij == C64::default() {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    out[(i * rb + k, j * cb + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Kronecker product of vectors, `(y⊗x)[k*m + i] = y[k] * x[i]`.
pub fn kron_vec(y: &CVector, x: &CVector) -> CVector {
    let m = x.len();
    CVector::from_fn(y.len() * m, |r, _| y[r / m] * x[r % m])
}

/// Transpose on the second tensor factor, for arbitrary (not necessarily
/// Hermitian) operators.
pub fn partial_transpose_raw(a: &CMatrix, dims: BipartiteDims) -> Result<CMatrix> {
    dims.check(a)?;
    let (n, m) = (dims.n, dims.m);
    let mut out = CMatrix::zeros(n * m, n * m);
    for k in 0..n {
        for l in 0..n {
            for i in 0..m {
                for j in 0..m {
                    out[(k * m + i, l * m + j)] = a[(k * m + j, l * m + i)];
                }
            }
        }
    }
    Ok(out)
}

/// Partial transpose `A^τ`: each `m×m` block of the `n×n` block grid is transposed.
pub fn partial_transpose(a: &HermMatrix, dims: BipartiteDims) -> Result<HermMatrix> {
    // block transposition of a Hermitian matrix is Hermitian entry for entry
    partial_transpose_raw(a, dims).map(HermMatrix)
}

/// Eigenvalues in ascending order.
pub fn eigenvalues(a: &HermMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = a.0.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Eigenvalues (ascending) and the matching orthonormal eigenvectors as columns.
pub fn eigh(a: &HermMatrix) -> (Vec<f64>, CMatrix) {
    let eig = a.0.clone().symmetric_eigen();
    let n = a.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Smallest eigenvalue.
pub fn eig_min(a: &HermMatrix) -> f64 {
    a.0.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Smallest eigenvalue with a unit eigenvector.
pub fn eig_min_pair(a: &HermMatrix) -> (f64, CVector) {
    let eig = a.0.clone().symmetric_eigen();
    let (idx, val) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, v)| if v < best.1 { (i, v) } else { best });
    (val, eig.eigenvectors.column(idx).into_owned())
}

/// Singular values of a general complex matrix, descending.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    let mut sv: Vec<f64> = a.singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Number of singular values of the stacked vectors above `tol * σ_max`.
pub fn span_rank(vectors: &[CVector], tol: f64) -> Result<usize> {
    let first = vectors.first().ok_or(Error::EmptyInput("span_rank needs at least one vector"))?;
    let len = first.len();
    if vectors.iter().any(|v| v.len() != len) {
        return Err(Error::DimensionMismatch("span_rank vectors differ in length".into()));
    }
    let stacked = CMatrix::from_fn(vectors.len(), len, |r, c| vectors[r][c]);
    let sv = singular_values(&stacked);
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > tol * top).count())
}

/// Identifies an `m×n` matrix with a vector of `C^n ⊗ C^m` so that the rank-one
/// matrix `x y*` becomes the product vector `ȳ ⊗ x`.
pub fn identify(mat: &CMatrix) -> CVector {
    let (m, n) = mat.shape();
    CVector::from_fn(n * m, |r, _| mat[(r % m, r / m)])
}

/// Inverse of [`identify`].
pub fn unidentify(v: &CVector, m: usize, n: usize) -> Result<CMatrix> {
    if v.len() != m * n {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} cannot be reshaped to {m}x{n}",
            v.len()
        )));
    }
    Ok(CMatrix::from_fn(m, n, |i, k| v[k * m + i]))
}

/// Real Frobenius inner product `Re Tr(A* B)`.
pub fn frobenius_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}
