//! Dense complex linear algebra shared across modules.
//!
//! Vectorization follows nalgebra's column-major storage, so `vec(A)` is the
//! storage slice and `(B ⊗ A) vec(X) = vec(A X Bᵀ)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const J: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vec_of(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

pub fn unvec(v: &CVector, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_column_slice(rows, cols, v.as_slice())
}

/// Nuclear norm via singular values.
pub fn nuclear_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().iter().sum()
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Numerical rank: singular values above `tol` (absolute).
pub fn numerical_rank(m: &CMatrix, tol: f64) -> usize {
    singular_values(m).into_iter().filter(|&s| s > tol).count()
}

/// Ratio of the largest to the smallest singular value (infinite when singular).
pub fn condition_number(m: &CMatrix) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Inverse of a Hermitian positive-definite matrix through its Cholesky factor.
pub fn hpd_inverse(m: CMatrix) -> Result<CMatrix> {
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::Numerical("matrix is not Hermitian positive definite".into()))?;
    Ok(chol.inverse())
}

pub fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub(crate) fn check_shape(
    context: &'static str,
    m: &CMatrix,
    rows: usize,
    cols: usize,
) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(Error::dims(context, (rows, cols), m.shape()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vec_unvec_is_column_major() {
        let m = CMatrix::from_fn(3, 2, |i, j| c(i as f64, j as f64));
        let v = vec_of(&m);
        assert_eq!(v[1], c(1.0, 0.0));
        assert_eq!(v[3], c(0.0, 1.0));
        assert_eq!(unvec(&v, 3, 2), m);
    }

    #[test]
    fn kronecker_vec_identity() {
        // (B ⊗ A) vec(X) = vec(A X Bᵀ)
        let a = CMatrix::from_fn(2, 3, |i, j| c(i as f64 + 1.0, j as f64 - 0.5));
        let b = CMatrix::from_fn(2, 2, |i, j| c((i * 2 + j) as f64, 1.0));
        let x = CMatrix::from_fn(3, 2, |i, j| c(j as f64, i as f64 * 0.3));
        let lhs = b.kronecker(&a) * vec_of(&x);
        let rhs = vec_of(&(&a * &x * b.transpose()));
        assert!((lhs - rhs).norm() < 1e-12);
    }
}
