//! Dense complex matrices and the few decompositions the crate relies on.
//!
//! Everything numeric in this crate is carried by [`CMatrix`], a dense
//! column-major complex matrix. The helpers here wrap the decompositions
//! (LU, Schur, Hermitian eigenvalues, SVD) behind the handful of scalar
//! questions the algorithms actually ask: operator norms, spectral radii,
//! condition numbers, positive definiteness.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// d x d identity.
pub fn eye(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn zeros(r: usize, c: usize) -> CMatrix {
    CMatrix::zeros(r, c)
}

/// Row-major construction, the order used by the JSON model files.
pub fn from_rows(r: usize, c: usize, entries: &[Complex64]) -> CMatrix {
    CMatrix::from_row_slice(r, c, entries)
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Operator (spectral) norm: the largest singular value.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.nrows() == 1 && m.ncols() == 1 {
        return m[(0, 0)].norm();
    }
    // sqrt of the largest eigenvalue of the Hermitian product; cheaper and
    // more robust than a full SVD for the small matrices we see here.
    let g = m.adjoint() * m;
    herm_eigenvalues(&g).into_iter().fold(0.0f64, f64::max).max(0.0).sqrt()
}

/// Frobenius norm.
pub fn fro_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigenvalues of a (numerically) Hermitian matrix, unordered.
pub fn herm_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let h = (m + m.adjoint()).scale(0.5);
    h.symmetric_eigen().eigenvalues.iter().copied().collect()
}

/// Smallest eigenvalue of the Hermitian part (A + A*)/2.
pub fn herm_min_eigenvalue(m: &CMatrix) -> f64 {
    herm_eigenvalues(m).into_iter().fold(f64::INFINITY, f64::min)
}

/// All eigenvalues of a general complex square matrix.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    m.clone()
        .schur()
        .eigenvalues()
        .map(|v| v.iter().copied().collect())
        .ok_or_else(|| Error::InvalidInput("Schur eigenvalue extraction failed".into()))
}

/// Spectral radius max |lambda|.
pub fn spectral_radius(m: &CMatrix) -> Result<f64> {
    Ok(eigenvalues(m)?.into_iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Solve A X = B by LU with a residual check.
pub fn solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let lu = a.clone().lu();
    let x = lu
        .solve(b)
        .ok_or_else(|| Error::InvalidInput("singular linear system".into()))?;
    Ok(x)
}

pub fn inverse(a: &CMatrix) -> Result<CMatrix> {
    a.clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidInput("matrix is not invertible".into()))
}

/// 2-norm condition number via singular values.
pub fn condition_number(a: &CMatrix) -> f64 {
    let sv = a.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0f64, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn smallest_singular_value(a: &CMatrix) -> f64 {
    let sv = a.clone().svd(false, false).singular_values;
    sv.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Kronecker product A (x) I_d, the lift that turns the scalar M x M
/// building blocks into their dM x dM block forms.
pub fn kron_identity(a: &CMatrix, d: usize) -> CMatrix {
    a.kronecker(&eye(d))
}

/// Kronecker product of a scalar column vector with I_d (an Md x d stack).
pub fn kron_column_identity(col: &CVector, d: usize) -> CMatrix {
    let m = CMatrix::from_column_slice(col.len(), 1, col.as_slice());
    m.kronecker(&eye(d))
}

/// Unitary factor of the polar decomposition A = U P with P Hermitian
/// positive semidefinite. Requires A invertible.
pub fn polar_unitary(a: &CMatrix) -> Result<CMatrix> {
    let g = a.adjoint() * a;
    let h = (&g + g.adjoint()).scale(0.5);
    let eig = h.symmetric_eigen();
    let mut inv_sqrt = CMatrix::zeros(a.ncols(), a.ncols());
    for (i, lam) in eig.eigenvalues.iter().enumerate() {
        if *lam <= 0.0 {
            return Err(Error::InvalidInput("polar decomposition of a singular matrix".into()));
        }
        inv_sqrt[(i, i)] = cr(1.0 / lam.sqrt());
    }
    let p_inv = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.adjoint();
    Ok(a * p_inv)
}

/// Hermitian positive-definite Cholesky factor L with L L* = A.
pub fn cholesky(a: &CMatrix) -> Result<CMatrix> {
    let h = (a + a.adjoint()).scale(0.5);
    nalgebra::Cholesky::new(h)
        .map(|c| c.l())
        .ok_or_else(|| Error::InvalidInput("matrix is not positive definite".into()))
}

/// Max over entries of |a - b| relative to 1 + |b|.
pub fn rel_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    op_norm(&(a - b)) / (1.0 + op_norm(b))
}
