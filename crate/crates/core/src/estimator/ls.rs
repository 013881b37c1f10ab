//! Minimum-norm least-squares baseline on the masked linear model
//! `vec(R) = diag(vec Ω)(S̄ᵀ ⊗ Wᵀ Pᴴ) vec(H̄) + noise`.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::frontend::{FrontEndModel, ObservationBlock, PilotBlock, SelectionMask};
use crate::geometry::split_channels;
use crate::linalg::{check_shape, unvec, vec_of, CMatrix};

use super::operator::data_gram;

/// Eigenvalues of the normal matrix below this fraction of the largest are
/// treated as zero.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LsEstimate {
    pub h1: CMatrix,
    pub h2: CMatrix,
    pub h_bar: CMatrix,
    /// Set when the observed equations cannot pin down every unknown; the
    /// returned solution is then the minimum-norm one.
    pub underdetermined: bool,
    pub rank: usize,
}

pub fn ls_estimate(
    observations: &ObservationBlock,
    front_end: &FrontEndModel,
    pilots: &PilotBlock,
    mask: &SelectionMask,
) -> Result<LsEstimate> {
    let n_ris = front_end.n_ris;
    let n_ues = pilots.stacked.nrows();
    let t = pilots.t_slots();
    check_shape("ls_estimate: observations", &observations.r_matrix, n_ris, t)?;
    if mask.n_ris() != n_ris || mask.t_slots() != t {
        return Err(Error::dims("ls_estimate: mask", (n_ris, t), (mask.n_ris(), mask.t_slots())));
    }
    let combiner = front_end.combiner();
    let n = n_ris * n_ues;

    let (h_bar, rank) = if mask.is_all_ones() {
        // (S̄ᵀ ⊗ B)† = (S̄ᵀ)† ⊗ B†, so H̄ = B† R S̄†
        let b_pinv = pinv(&combiner)?;
        let s_pinv = pinv(&pilots.stacked)?;
        let rank = rank_of(&combiner) * rank_of(&pilots.stacked);
        (b_pinv * &observations.r_matrix * s_pinv, rank)
    } else {
        let gram = data_gram(&combiner, &pilots.stacked, mask);
        let back = combiner.adjoint() * mask.apply(&observations.r_matrix) * pilots.stacked.adjoint();
        let eig = SymmetricEigen::new(gram);
        let top = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
        let cutoff = top * RANK_TOLERANCE;
        let v = &eig.eigenvectors;
        let coords = v.adjoint() * vec_of(&back);
        let mut rank = 0;
        let scaled = coords
            .iter()
            .zip(eig.eigenvalues.iter())
            .map(|(c, &lambda)| {
                if lambda > cutoff {
                    rank += 1;
                    c / lambda
                } else {
                    Complex64::default()
                }
            })
            .collect::<Vec<_>>();
        let sol = v * nalgebra::DVector::from_vec(scaled);
        (unvec(&sol, n_ris, n_ues), rank)
    };

    let underdetermined = mask.observed_count() < n || rank < n;
    let (h1, h2) = split_channels(&h_bar, pilots.s1.nrows());
    Ok(LsEstimate {
        h1,
        h2,
        h_bar,
        underdetermined,
        rank,
    })
}

fn pinv(m: &CMatrix) -> Result<CMatrix> {
    let eps = m.norm() * 1e-12;
    m.clone()
        .pseudo_inverse(eps)
        .map_err(|e| Error::Numerical(format!("pseudoinverse failed: {e}")))
}

fn rank_of(m: &CMatrix) -> usize {
    crate::linalg::numerical_rank(m, 1e-10)
}
