//! The stacked LASSO operator `Φ̄ = [Φ1; √ρ·Φ2]` in factored form.
//!
//! With `z̄ = vec(Z̄)`:
//! - `Φ1 z̄ = vec(Ω ∘ (B Z̄ M))`, `B = Wᵀ Pᴴ D_RIS`, `M = D_UEsᴴ S̄`
//!   (i.e. `Φ1 = diag(vec Ω)·(Mᵀ ⊗ B)`);
//! - `Φ2 z̄ = vec(D_RIS Z̄ D_UEsᴴ)` (i.e. `Φ2 = D_UEs* ⊗ D_RIS`), which is unitary.
//!
//! Because `Φ2` is unitary, `Φ̄` always has full column rank and
//! `Φ̄† = (Φ1ᴴΦ1 + ρI)⁻¹ Φ̄ᴴ`. The Gram matrix is assembled from the Kronecker
//! factors row by row, `Φ1ᴴΦ1 = Σ_r C_r ⊗ (b_rᴴ b_r)` with
//! `C_r = Σ_t Ω[r,t]·conj(m_t) m_tᵀ`, and inverted once.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::frontend::{FrontEndModel, PilotBlock, SelectionMask, MAX_PROFILE_CONDITION};
use crate::geometry::BeamspaceBasis;
use crate::linalg::{check_shape, condition_number, hpd_inverse, unvec, vec_of, CMatrix, CVector};

#[derive(Debug, Clone)]
pub struct StructuredOperator {
    rho: f64,
    n_ris: usize,
    n_ues: usize,
    t_slots: usize,
    d_ris: CMatrix,
    d_ues: CMatrix,
    /// `B = Wᵀ Pᴴ D_RIS`.
    combiner: CMatrix,
    /// `M = D_UEsᴴ S̄`.
    pilot_beams: CMatrix,
    mask: SelectionMask,
    /// `(Φ1ᴴΦ1 + ρI)⁻¹`.
    gram_inverse: CMatrix,
    /// `tr(Φ1ᴴΦ1) / (N_RIS·N_UEs)`.
    data_gain: f64,
}

pub fn build_structured_operator(
    front_end: &FrontEndModel,
    basis: &BeamspaceBasis,
    pilots: &PilotBlock,
    mask: &SelectionMask,
    rho: f64,
) -> Result<StructuredOperator> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidArgument(format!("rho must be positive, got {rho}")));
    }
    let n_ris = basis.n_ris();
    let n_ues = basis.n_ues();
    let t_slots = pilots.t_slots();
    check_shape("structured operator: profile bank", &front_end.profile_bank, n_ris, n_ris)?;
    check_shape("structured operator: P", &front_end.p_matrix, n_ris, n_ris)?;
    check_shape("structured operator: pilots", &pilots.stacked, n_ues, t_slots)?;
    if mask.n_ris() != n_ris || mask.t_slots() != t_slots {
        return Err(Error::dims(
            "structured operator: mask",
            (n_ris, t_slots),
            (mask.n_ris(), mask.t_slots()),
        ));
    }
    let condition = condition_number(&front_end.profile_bank);
    if condition > MAX_PROFILE_CONDITION {
        return Err(Error::SingularProfileBank { condition });
    }

    let combiner = front_end.combiner() * &basis.d_ris;
    let pilot_beams = basis.d_ues.adjoint() * &pilots.stacked;
    let mut gram = data_gram(&combiner, &pilot_beams, mask);
    let n = n_ris * n_ues;
    let data_gain = (0..n).map(|k| gram[(k, k)].re).sum::<f64>() / n as f64;
    for k in 0..n {
        gram[(k, k)] += rho;
    }
    let gram_inverse = hpd_inverse(gram)?;

    Ok(StructuredOperator {
        rho,
        n_ris,
        n_ues,
        t_slots,
        d_ris: basis.d_ris.clone(),
        d_ues: basis.d_ues.clone(),
        combiner,
        pilot_beams,
        mask: mask.clone(),
        gram_inverse,
        data_gain,
    })
}

/// `Φ1ᴴΦ1` for `Φ1 = diag(vec Ω)(Mᵀ ⊗ B)`, accumulated one RIS output row at a time.
pub(crate) fn data_gram(b: &CMatrix, m: &CMatrix, mask: &SelectionMask) -> CMatrix {
    let n_ris = b.nrows();
    let n_ues = m.nrows();
    let n = n_ris * n_ues;
    let mut gram = CMatrix::zeros(n, n);
    let mut c_r = CMatrix::zeros(n_ues, n_ues);
    let mut b_row = vec![Complex64::default(); n_ris];
    let mut b_row_conj = vec![Complex64::default(); n_ris];
    let g = gram.as_mut_slice();
    for r in 0..n_ris {
        c_r.fill(Complex64::default());
        let mut any = false;
        for t in 0..m.ncols() {
            if !mask.is_selected(r, t) {
                continue;
            }
            any = true;
            for up in 0..n_ues {
                let mt = m[(up, t)];
                for u in 0..n_ues {
                    c_r[(u, up)] += m[(u, t)].conj() * mt;
                }
            }
        }
        if !any {
            continue;
        }
        for i in 0..n_ris {
            b_row[i] = b[(r, i)];
            b_row_conj[i] = b_row[i].conj();
        }
        for up in 0..n_ues {
            for ip in 0..n_ris {
                let col = up * n_ris + ip;
                let col_slice = &mut g[col * n..(col + 1) * n];
                let bip = b_row[ip];
                for u in 0..n_ues {
                    let coef = c_r[(u, up)] * bip;
                    let block = &mut col_slice[u * n_ris..(u + 1) * n_ris];
                    for (dst, bc) in block.iter_mut().zip(&b_row_conj) {
                        *dst += coef * bc;
                    }
                }
            }
        }
    }
    gram
}

impl StructuredOperator {
    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn n_ris(&self) -> usize {
        self.n_ris
    }

    pub fn n_ues(&self) -> usize {
        self.n_ues
    }

    pub fn t_slots(&self) -> usize {
        self.t_slots
    }

    pub fn mask(&self) -> &SelectionMask {
        &self.mask
    }

    pub fn d_ris(&self) -> &CMatrix {
        &self.d_ris
    }

    pub fn d_ues(&self) -> &CMatrix {
        &self.d_ues
    }

    /// Mean diagonal of `Φ1ᴴΦ1`: average energy the data term puts on one
    /// beamspace coefficient.
    pub fn data_gain(&self) -> f64 {
        self.data_gain
    }

    /// `Ω ∘ (B Z M)`.
    pub fn apply_phi1(&self, z: &CMatrix) -> CMatrix {
        self.mask.apply(&(&self.combiner * z * &self.pilot_beams))
    }

    /// `Bᴴ (Ω ∘ Y) Mᴴ`.
    pub fn apply_phi1_adjoint(&self, y: &CMatrix) -> CMatrix {
        self.combiner.adjoint() * self.mask.apply(y) * self.pilot_beams.adjoint()
    }

    /// `D_RIS Z D_UEsᴴ`.
    pub fn apply_phi2(&self, z: &CMatrix) -> CMatrix {
        &self.d_ris * z * self.d_ues.adjoint()
    }

    /// `D_RISᴴ Y D_UEs`; equal to `Φ2†` since `Φ2` is unitary.
    pub fn apply_phi2_adjoint(&self, y: &CMatrix) -> CMatrix {
        self.d_ris.adjoint() * y * &self.d_ues
    }

    /// `Φ̄ z̄ = [Φ1 z̄; √ρ Φ2 z̄]`.
    pub fn apply_stacked(&self, z: &CVector) -> Result<CVector> {
        let n = self.n_ris * self.n_ues;
        if z.len() != n {
            return Err(Error::dims("apply_stacked", (n, 1), (z.len(), 1)));
        }
        let zm = unvec(z, self.n_ris, self.n_ues);
        let top = vec_of(&self.apply_phi1(&zm));
        let bottom = vec_of(&self.apply_phi2(&zm)) * Complex64::from(self.rho.sqrt());
        let mut out = CVector::zeros(top.len() + bottom.len());
        out.rows_mut(0, top.len()).copy_from(&top);
        out.rows_mut(top.len(), bottom.len()).copy_from(&bottom);
        Ok(out)
    }

    /// `Φ̄† ξ̄` for `ξ̄ = [vec(Ξ1); vec(Ξ2)]` given blockwise (`Ξ2` already
    /// carries its `√ρ` factor).
    pub fn apply_pinv(&self, xi1: &CMatrix, xi2: &CMatrix) -> Result<CMatrix> {
        check_shape("apply_pinv: first block", xi1, self.n_ris, self.t_slots)?;
        check_shape("apply_pinv: second block", xi2, self.n_ris, self.n_ues)?;
        let rhs = self.apply_phi1_adjoint(xi1) + self.apply_phi2_adjoint(xi2) * Complex64::from(self.rho.sqrt());
        Ok(self.solve_normal(&rhs))
    }

    /// `Φ̄† ξ̄` on the stacked vector.
    pub fn apply_pinv_vec(&self, xi_bar: &CVector) -> Result<CVector> {
        let n1 = self.n_ris * self.t_slots;
        let n2 = self.n_ris * self.n_ues;
        if xi_bar.len() != n1 + n2 {
            return Err(Error::dims("apply_pinv_vec", (n1 + n2, 1), (xi_bar.len(), 1)));
        }
        let xi1 = unvec(&xi_bar.rows(0, n1).into_owned(), self.n_ris, self.t_slots);
        let xi2 = unvec(&xi_bar.rows(n1, n2).into_owned(), self.n_ris, self.n_ues);
        Ok(vec_of(&self.apply_pinv(&xi1, &xi2)?))
    }

    /// `(Φ1ᴴΦ1 + ρI)⁻¹ vec(rhs)` reshaped to `N_RIS × N_UEs`.
    pub(crate) fn solve_normal(&self, rhs: &CMatrix) -> CMatrix {
        let z = &self.gram_inverse * vec_of(rhs);
        unvec(&z, self.n_ris, self.n_ues)
    }

    /// Dense `Φ1`. Sized `(N_RIS·T) × (N_RIS·N_UEs)`; meant for small instances.
    pub fn materialize_phi1(&self) -> CMatrix {
        let mut dense = self.pilot_beams.transpose().kronecker(&self.combiner);
        for t in 0..self.t_slots {
            for r in 0..self.n_ris {
                if !self.mask.is_selected(r, t) {
                    dense.row_mut(t * self.n_ris + r).fill(Complex64::default());
                }
            }
        }
        dense
    }

    /// Dense `Φ2 = D_UEs* ⊗ D_RIS`.
    pub fn materialize_phi2(&self) -> CMatrix {
        self.d_ues.map(|v| v.conj()).kronecker(&self.d_ris)
    }

    /// Dense `Φ̄`.
    pub fn materialize_stacked(&self) -> CMatrix {
        let phi1 = self.materialize_phi1();
        let phi2 = self.materialize_phi2() * Complex64::from(self.rho.sqrt());
        let mut out = CMatrix::zeros(phi1.nrows() + phi2.nrows(), phi1.ncols());
        out.rows_mut(0, phi1.nrows()).copy_from(&phi1);
        out.rows_mut(phi1.nrows(), phi2.nrows()).copy_from(&phi2);
        out
    }

    /// Dense `Φ̄†` assembled from the factored pieces.
    pub fn materialize_pinv(&self) -> CMatrix {
        &self.gram_inverse * self.materialize_stacked().adjoint()
    }
}
