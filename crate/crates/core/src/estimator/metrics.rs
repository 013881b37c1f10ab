//! Estimation error metrics.

use crate::error::{Error, Result};
use crate::linalg::{frobenius, CMatrix};

/// `Σ_k ‖H_k − Ĥ_k‖_F / ‖H_k‖_F` over the two links.
pub fn nmse(estimates: (&CMatrix, &CMatrix), truths: (&CMatrix, &CMatrix)) -> Result<f64> {
    let mut total = 0.0;
    for (link, (est, truth)) in [(estimates.0, truths.0), (estimates.1, truths.1)].into_iter().enumerate() {
        if est.shape() != truth.shape() {
            return Err(Error::dims("nmse", truth.shape(), est.shape()));
        }
        let norm = frobenius(truth);
        if norm == 0.0 {
            return Err(Error::ZeroNormReference { link: link + 1 });
        }
        total += frobenius(&(truth - est)) / norm;
    }
    Ok(total)
}

/// `10·log10` of a non-negative metric.
pub fn nmse_db(value: f64) -> f64 {
    10.0 * value.log10()
}
