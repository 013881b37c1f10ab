//! Reflection phase design for the RIS-assisted UE1 → UE2 link.
//!
//! The end-to-end channel is `H_e2e = H + H2ᴴ diag(φ) H1` and the objective is
//! `log2 det(I + SNR·H_e2e H_e2eᴴ)`. Phases are optimized by projected
//! gradient ascent on the angles and then snapped to a `b`-bit grid.

use std::f64::consts::{LN_2, PI, TAU};

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontend::{lorentzian, Resolution};
use crate::linalg::{check_shape, CMatrix, CVector, J};

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if a >= TAU {
        0.0
    } else {
        a
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector {
    pub angles: DVector<f64>,
    pub values: CVector,
}

impl PhaseVector {
    pub fn from_angles(angles: &[f64]) -> Self {
        let angles = DVector::from_iterator(angles.len(), angles.iter().map(|&a| wrap_angle(a)));
        let values = angles.map(lorentzian);
        Self { angles, values }
    }

    /// Every element at angle `3π/2`, where the reflection value is zero.
    pub fn zeros(n: usize) -> Self {
        Self {
            angles: DVector::from_element(n, 1.5 * PI),
            values: CVector::zeros(n),
        }
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct LinkSet {
    /// Direct UE1 → UE2 channel, `N2 × N1`.
    pub direct: CMatrix,
    /// UE1 → RIS, `N_RIS × N1`.
    pub h1: CMatrix,
    /// UE2 → RIS, `N_RIS × N2`.
    pub h2: CMatrix,
    pub snr: f64,
}

impl LinkSet {
    pub fn new(direct: CMatrix, h1: CMatrix, h2: CMatrix, snr: f64) -> Result<Self> {
        let (n_ris, n1) = h1.shape();
        let n2 = h2.ncols();
        check_shape("link set: h2", &h2, n_ris, n2)?;
        check_shape("link set: direct", &direct, n2, n1)?;
        if !(snr >= 0.0 && snr.is_finite()) {
            return Err(Error::InvalidArgument(format!("snr must be non-negative, got {snr}")));
        }
        Ok(Self { direct, h1, h2, snr })
    }

    /// Links with no direct path.
    pub fn blocked(h1: CMatrix, h2: CMatrix, snr: f64) -> Result<Self> {
        let direct = CMatrix::zeros(h2.ncols(), h1.ncols());
        Self::new(direct, h1, h2, snr)
    }

    pub fn n_ris(&self) -> usize {
        self.h1.nrows()
    }

    /// Same links with `H1`, `H2` replaced, e.g. by estimates.
    pub fn with_reflected(&self, h1: CMatrix, h2: CMatrix) -> Result<Self> {
        Self::new(self.direct.clone(), h1, h2, self.snr)
    }
}

/// `H + H2ᴴ diag(values) H1`.
pub fn e2e_channel_values(links: &LinkSet, values: &CVector) -> Result<CMatrix> {
    if values.len() != links.n_ris() {
        return Err(Error::dims("e2e_channel", (links.n_ris(), 1), (values.len(), 1)));
    }
    let mut scaled = links.h1.clone();
    for (mut row, v) in scaled.row_iter_mut().zip(values.iter()) {
        row *= *v;
    }
    Ok(&links.direct + links.h2.adjoint() * scaled)
}

pub fn e2e_channel(links: &LinkSet, phases: &PhaseVector) -> Result<CMatrix> {
    e2e_channel_values(links, &phases.values)
}

/// `I + SNR·E Eᴴ` and its Cholesky factor.
fn covariance(links: &LinkSet, e2e: &CMatrix) -> Result<nalgebra::Cholesky<Complex64, nalgebra::Dyn>> {
    let n2 = e2e.nrows();
    let r = CMatrix::identity(n2, n2) + e2e * e2e.adjoint() * Complex64::from(links.snr);
    r.cholesky()
        .ok_or_else(|| Error::Numerical("rate covariance is not positive definite".into()))
}

fn rate_of_e2e(links: &LinkSet, e2e: &CMatrix) -> Result<f64> {
    let chol = covariance(links, e2e)?;
    let l = chol.l_dirty();
    let log_det: f64 = (0..e2e.nrows()).map(|i| l[(i, i)].re.ln()).sum::<f64>() * 2.0;
    Ok((log_det / LN_2).max(0.0))
}

/// `log2 det(I + SNR·H_e2e H_e2eᴴ)` in bits per channel use.
pub fn rate(links: &LinkSet, phases: &PhaseVector) -> Result<f64> {
    rate_of_e2e(links, &e2e_channel(links, phases)?)
}

/// Derivative of [`rate`] with respect to each reflection angle.
pub fn rate_gradient(links: &LinkSet, angles: &DVector<f64>) -> Result<DVector<f64>> {
    let phases = PhaseVector::from_angles(angles.as_slice());
    let e2e = e2e_channel(links, &phases)?;
    let chol = covariance(links, &e2e)?;
    // K = R⁻¹ H2ᴴ, then diag(H1 Eᴴ K)
    let k = chol.solve(&links.h2.adjoint());
    let ek = e2e.adjoint() * k;
    let scale = 2.0 * links.snr / LN_2;
    Ok(DVector::from_fn(links.n_ris(), |i, _| {
        let diag: Complex64 = (0..links.h1.ncols()).map(|a| links.h1[(i, a)] * ek[(a, i)]).sum();
        let v = 0.5 * J * Complex64::from_polar(1.0, angles[i]);
        scale * (v * diag).re
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PgaConfig {
    pub step_size: f64,
    pub max_iterations: usize,
    pub rate_tolerance: f64,
    pub bits: Resolution,
}

impl Default for PgaConfig {
    fn default() -> Self {
        Self {
            step_size: 2.5,
            max_iterations: 200,
            rate_tolerance: 1e-5,
            bits: Resolution::Infinite,
        }
    }
}

impl PgaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::InvalidArgument(format!("step size must be positive, got {}", self.step_size)));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be positive".into()));
        }
        if !(self.rate_tolerance > 0.0) {
            return Err(Error::InvalidArgument("rate tolerance must be positive".into()));
        }
        if self.bits == Resolution::Bits(0) {
            return Err(Error::InvalidArgument("reflection codebook needs at least one bit".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PgaOutcome {
    pub phases: PhaseVector,
    /// Rate at the initial angles followed by one entry per iteration.
    pub rate_trace: Vec<f64>,
    pub converged: bool,
}

impl PgaOutcome {
    pub fn final_rate(&self) -> f64 {
        *self.rate_trace.last().expect("trace holds the initial rate")
    }
}

/// Projected gradient ascent on the angles, `θ ← (θ + μ∇f) mod 2π`.
pub fn optimize_reflection(links: &LinkSet, config: &PgaConfig, initial_angles: &[f64]) -> Result<PgaOutcome> {
    config.validate()?;
    if initial_angles.len() != links.n_ris() {
        return Err(Error::dims("optimize_reflection", (links.n_ris(), 1), (initial_angles.len(), 1)));
    }
    let mut phases = PhaseVector::from_angles(initial_angles);
    let mut current = rate(links, &phases)?;
    let mut rate_trace = vec![current];
    let mut converged = false;
    for it in 1..=config.max_iterations {
        let grad = rate_gradient(links, &phases.angles)?;
        let stepped: Vec<f64> = phases
            .angles
            .iter()
            .zip(grad.iter())
            .map(|(a, g)| a + config.step_size * g)
            .collect();
        if stepped.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite { stage: "phase update", iteration: it });
        }
        phases = PhaseVector::from_angles(&stepped);
        let next = rate(links, &phases)?;
        if !next.is_finite() {
            return Err(Error::NonFinite { stage: "rate evaluation", iteration: it });
        }
        rate_trace.push(next);
        let delta = (next - current).abs();
        current = next;
        if delta < config.rate_tolerance {
            converged = true;
            break;
        }
    }
    Ok(PgaOutcome {
        phases,
        rate_trace,
        converged,
    })
}

/// Grid spacing `2^{2−b}π` of a `b`-bit reflection codebook.
pub fn grid_spacing(bits: u32) -> f64 {
    TAU / (1u64 << (bits - 1)) as f64
}

/// Snaps each angle to the nearest point of the `b`-bit grid, treating 0 and
/// 2π as the same point.
pub fn quantize_phases(continuous: &PhaseVector, bits: u32) -> Result<PhaseVector> {
    if bits == 0 || bits > 30 {
        return Err(Error::InvalidArgument(format!("unsupported reflection resolution {bits}")));
    }
    let levels = 1u64 << (bits - 1);
    let spacing = grid_spacing(bits);
    let snapped: Vec<f64> = continuous
        .angles
        .iter()
        .map(|&a| {
            let m = (wrap_angle(a) / spacing).round() as u64 % levels;
            m as f64 * spacing
        })
        .collect();
    Ok(PhaseVector::from_angles(&snapped))
}

/// Applies the configured reflection resolution; a no-op for `Infinite`.
pub fn apply_resolution(continuous: &PhaseVector, bits: Resolution) -> Result<PhaseVector> {
    match bits {
        Resolution::Infinite => Ok(continuous.clone()),
        Resolution::Bits(b) => quantize_phases(continuous, b),
    }
}
