use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{all_finite, CMatrix, CVector};

fn check_threshold(threshold: f64) -> Result<()> {
    if !(threshold >= 0.0) || !threshold.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "threshold must be finite and non-negative, got {threshold}"
        )));
    }
    Ok(())
}

/// Singular value thresholding `U·max(Σ − τ, 0)·Vᴴ`, the proximal operator of
/// `τ‖·‖_*`.
pub fn svt(m: &CMatrix, threshold: f64) -> Result<CMatrix> {
    check_threshold(threshold)?;
    if !all_finite(m) {
        return Err(Error::NonFinite {
            stage: "svt input",
            iteration: 0,
        });
    }
    if m.is_empty() {
        return Ok(m.clone());
    }
    let svd = m.clone().svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::Numerical("svd did not return singular vectors".into())),
    };
    let mut out = CMatrix::zeros(m.nrows(), m.ncols());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        let shrunk = s - threshold;
        if shrunk > 0.0 {
            out += (u.column(k) * v_t.row(k)) * Complex64::from(shrunk);
        }
    }
    Ok(out)
}

/// Real and imaginary parts shrunk independently by `τ`.
#[inline]
pub fn soft_threshold_scalar(z: Complex64, threshold: f64) -> Complex64 {
    #[inline]
    fn shrink(x: f64, t: f64) -> f64 {
        x.signum() * (x.abs() - t).max(0.0)
    }
    Complex64::new(shrink(z.re, threshold), shrink(z.im, threshold))
}

pub fn soft_threshold(v: &CVector, threshold: f64) -> Result<CVector> {
    check_threshold(threshold)?;
    Ok(v.map(|z| soft_threshold_scalar(z, threshold)))
}

pub fn soft_threshold_matrix(m: &CMatrix, threshold: f64) -> Result<CMatrix> {
    check_threshold(threshold)?;
    Ok(m.map(|z| soft_threshold_scalar(z, threshold)))
}
