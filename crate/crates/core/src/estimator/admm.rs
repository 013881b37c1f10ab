//! Joint nuclear-norm plus beamspace-ℓ1 recovery of `H̄ = [H1 H2]`.
//!
//! Each iteration runs
//! 1. `H̄ ← SVT(D_RIS Z̄ D_UEsᴴ − (2/ρ)Γ, τ_Y/ρ)`
//! 2. `Z̄ ← S_{τ_Z}(Φ̄† ξ̄)`, `ξ̄ = [vec R; √ρ·vec(H̄ + (2/ρ)Γ)]`
//! 3. `Γ ← Γ + (ρ/2)(H̄ − D_RIS Z̄ D_UEsᴴ)`
//!
//! and stops once `‖H̄ − D_RIS Z̄ D_UEsᴴ‖_F` drops below the tolerance.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontend::ObservationBlock;
use crate::geometry::{split_channels, BeamspaceBasis};
use crate::linalg::{all_finite, check_shape, frobenius, nuclear_norm, CMatrix};

use super::operator::StructuredOperator;
use super::prox::{soft_threshold_matrix, svt};

pub const DEFAULT_RHO: f64 = 0.5;
pub const DEFAULT_MAX_ITERATIONS: usize = 500;
pub const DEFAULT_TOLERANCE_SCALE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmmConfig {
    pub rho: f64,
    pub tau_y: f64,
    pub tau_z: f64,
    pub max_iterations: usize,
    pub primal_tolerance: f64,
}

impl AdmmConfig {
    /// Builds a config with the default stepsize, iteration cap and the
    /// size-aware tolerance `1e-6·√(N_RIS·N_UEs)`.
    pub fn new(tau_y: f64, tau_z: f64, n_ris: usize, n_ues: usize) -> Result<Self> {
        let cfg = Self {
            rho: DEFAULT_RHO,
            tau_y,
            tau_z,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            primal_tolerance: DEFAULT_TOLERANCE_SCALE * ((n_ris * n_ues) as f64).sqrt(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::InvalidArgument(format!("rho must lie in (0, 1), got {}", self.rho)));
        }
        for (name, v) in [("tau_y", self.tau_y), ("tau_z", self.tau_z), ("primal_tolerance", self.primal_tolerance)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

/// Multipliers for the noise-scaled regularization weights
/// `τ_Y = c_Y·√N_RIS·σ_eff` and `τ_Z = c_Z·σ_eff·√(2 ln(N_RIS·N_UEs))`.
///
/// `σ_eff = σ/√g`, where `g` is the mean diagonal of `Φ1ᴴΦ1`: the standard
/// deviation of the noise left on one beamspace coefficient after the data
/// term has been inverted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmmWeights {
    pub c_y: f64,
    pub c_z: f64,
}

impl Default for AdmmWeights {
    fn default() -> Self {
        Self { c_y: 1.0, c_z: 1.0 }
    }
}

/// Floor keeping the weights strictly positive on noiseless data.
const MIN_WEIGHT: f64 = 1e-12;

impl AdmmWeights {
    pub fn effective_noise_std(noise_variance: f64, operator: &StructuredOperator) -> f64 {
        let gain = operator.data_gain();
        if gain > 0.0 {
            (noise_variance / gain).sqrt()
        } else {
            noise_variance.sqrt()
        }
    }

    /// `(τ_Y, τ_Z)` for the given noise variance and operator.
    pub fn resolve(&self, noise_variance: f64, operator: &StructuredOperator) -> (f64, f64) {
        let n_ris = operator.n_ris() as f64;
        let n = (operator.n_ris() * operator.n_ues()) as f64;
        let sigma = Self::effective_noise_std(noise_variance, operator);
        let tau_y = self.c_y * n_ris.sqrt() * sigma;
        let tau_z = self.c_z * sigma * (2.0 * n.ln()).max(0.0).sqrt();
        (tau_y.max(MIN_WEIGHT), tau_z.max(MIN_WEIGHT))
    }

    pub fn config(&self, noise_variance: f64, operator: &StructuredOperator) -> Result<AdmmConfig> {
        let (tau_y, tau_z) = self.resolve(noise_variance, operator);
        let mut cfg = AdmmConfig::new(tau_y, tau_z, operator.n_ris(), operator.n_ues())?;
        cfg.rho = operator.rho();
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub h_bar: CMatrix,
    pub z_bar: CMatrix,
    pub gamma: CMatrix,
    pub iteration: usize,
    pub primal_residual_history: Vec<f64>,
}

impl EstimatorState {
    pub fn zeros(n_ris: usize, n_ues: usize) -> Self {
        Self {
            h_bar: CMatrix::zeros(n_ris, n_ues),
            z_bar: CMatrix::zeros(n_ris, n_ues),
            gamma: CMatrix::zeros(n_ris, n_ues),
            iteration: 0,
            primal_residual_history: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub primal_residual: f64,
    /// `τ_Y‖H̄‖_*`.
    pub nuclear_norm_term: f64,
    /// `τ_Z Σ (|Re z| + |Im z|)`.
    pub l1_term: f64,
    /// `½‖R − Ω∘(Wᵀ Pᴴ H̄ S̄)‖²_F`.
    pub data_fit_term: f64,
}

#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    pub h1: CMatrix,
    pub h2: CMatrix,
    pub state: EstimatorState,
    pub trace: Vec<IterationRecord>,
    pub converged: bool,
}

impl ChannelEstimate {
    pub fn iterations(&self) -> usize {
        self.state.iteration
    }
}

pub fn estimate_channels(
    observations: &ObservationBlock,
    operator: &StructuredOperator,
    basis: &BeamspaceBasis,
    config: &AdmmConfig,
) -> Result<ChannelEstimate> {
    estimate_channels_observed(observations, operator, basis, config, |_, _| {})
}

/// Same as [`estimate_channels`], calling `observer(iteration, H̄)` after
/// every iteration.
pub fn estimate_channels_observed<F>(
    observations: &ObservationBlock,
    operator: &StructuredOperator,
    basis: &BeamspaceBasis,
    config: &AdmmConfig,
    mut observer: F,
) -> Result<ChannelEstimate>
where
    F: FnMut(usize, &CMatrix),
{
    config.validate()?;
    let n_ris = operator.n_ris();
    let n_ues = operator.n_ues();
    check_shape("estimate_channels: observations", &observations.r_matrix, n_ris, operator.t_slots())?;
    if basis.n_ris() != n_ris || basis.n_ues() != n_ues {
        return Err(Error::dims(
            "estimate_channels: basis",
            (n_ris, n_ues),
            (basis.n_ris(), basis.n_ues()),
        ));
    }

    let rho = config.rho;
    let dual_scale = Complex64::from(2.0 / rho);
    let svt_threshold = config.tau_y / rho;
    // Φ1ᴴ vec(R) is fixed across iterations
    let data_back = operator.apply_phi1_adjoint(&observations.r_matrix);

    let mut state = EstimatorState::zeros(n_ris, n_ues);
    let mut x = CMatrix::zeros(n_ris, n_ues);
    let mut trace = Vec::with_capacity(config.max_iterations);
    let mut converged = false;

    for it in 1..=config.max_iterations {
        let h = svt(&(&x - &state.gamma * dual_scale), svt_threshold)?;
        if !all_finite(&h) {
            return Err(Error::NonFinite { stage: "low-rank update", iteration: it });
        }

        let target = &h + &state.gamma * dual_scale;
        let rhs = &data_back + operator.apply_phi2_adjoint(&target) * Complex64::from(rho);
        let z = soft_threshold_matrix(&operator.solve_normal(&rhs), config.tau_z)?;
        if !all_finite(&z) {
            return Err(Error::NonFinite { stage: "sparse update", iteration: it });
        }

        x = operator.apply_phi2(&z);
        let gap = &h - &x;
        state.gamma += &gap * Complex64::from(0.5 * rho);
        if !all_finite(&state.gamma) {
            return Err(Error::NonFinite { stage: "dual update", iteration: it });
        }
        let residual = frobenius(&gap);

        let fit = &observations.r_matrix - operator.apply_phi1(&operator.apply_phi2_adjoint(&h));
        trace.push(IterationRecord {
            iteration: it,
            primal_residual: residual,
            nuclear_norm_term: config.tau_y * nuclear_norm(&h),
            l1_term: config.tau_z * z.iter().map(|v| v.re.abs() + v.im.abs()).sum::<f64>(),
            data_fit_term: 0.5 * fit.norm_squared(),
        });
        state.h_bar = h;
        state.z_bar = z;
        state.iteration = it;
        state.primal_residual_history.push(residual);
        observer(it, &state.h_bar);

        if residual < config.primal_tolerance {
            converged = true;
            break;
        }
    }

    let (h1, h2) = split_channels(&state.h_bar, basis.d_ue1.nrows());
    Ok(ChannelEstimate {
        h1,
        h2,
        state,
        trace,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{build_structured_operator, ls_estimate, nmse};
    use crate::frontend::{
        build_codebook, generate_pilots, sample_selection_mask, synthesize_observations, Architecture,
        FrontEndModel, Resolution, SelectionMask,
    };
    use crate::geometry::{sample_channel, AngleGrid, ArrayGeometry};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct Case {
        h1: CMatrix,
        h2: CMatrix,
        obs: ObservationBlock,
        op: StructuredOperator,
        basis: BeamspaceBasis,
        front_end: FrontEndModel,
        pilots: crate::frontend::PilotBlock,
        mask: SelectionMask,
    }

    fn digital_case(seed: u64, noise_variance: f64) -> Case {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ris = ArrayGeometry::upa(4, 2, 0.5).unwrap();
        let ue = ArrayGeometry::ula(2, 0.5).unwrap();
        let basis = BeamspaceBasis::new(&ris, 2, 2);
        let (h1, _) = sample_channel(&ue, &ris, 1, AngleGrid::OnGrid, &mut rng).unwrap();
        let (h2, _) = sample_channel(&ue, &ris, 1, AngleGrid::OnGrid, &mut rng).unwrap();
        let pilots = generate_pilots(2, 2, 64, 1.0, &mut rng).unwrap();
        let front_end = FrontEndModel::identity(8);
        let mask = SelectionMask::all_ones(8, 64);
        let obs = synthesize_observations(&h1, &h2, &pilots, &front_end, &mask, noise_variance, &mut rng).unwrap();
        let op = build_structured_operator(&front_end, &basis, &pilots, &mask, DEFAULT_RHO).unwrap();
        Case { h1, h2, obs, op, basis, front_end, pilots, mask }
    }

    fn hybrid_case(seed: u64) -> Case {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ris = ArrayGeometry::upa(4, 4, 0.5).unwrap();
        let ue = ArrayGeometry::ula(2, 0.5).unwrap();
        let basis = BeamspaceBasis::new(&ris, 2, 2);
        let (h1, _) = sample_channel(&ue, &ris, 2, AngleGrid::OffGrid, &mut rng).unwrap();
        let (h2, _) = sample_channel(&ue, &ris, 2, AngleGrid::OffGrid, &mut rng).unwrap();
        let pilots = generate_pilots(2, 2, 48, 1.0, &mut rng).unwrap();
        let cb = build_codebook(Resolution::Bits(3)).unwrap();
        let front_end = FrontEndModel::draw(Architecture::PartiallyConnected, 16, 4, cb, None, &mut rng).unwrap();
        let mask = sample_selection_mask(16, 4, 48, &mut rng).unwrap();
        let obs = synthesize_observations(&h1, &h2, &pilots, &front_end, &mask, 0.01, &mut rng).unwrap();
        let op = build_structured_operator(&front_end, &basis, &pilots, &mask, DEFAULT_RHO).unwrap();
        Case { h1, h2, obs, op, basis, front_end, pilots, mask }
    }

    #[test]
    fn noiseless_digital_recovery() {
        let c = digital_case(1, 0.0);
        let mut cfg = AdmmWeights::default().config(0.0, &c.op).unwrap();
        cfg.max_iterations = 200;
        let est = estimate_channels(&c.obs, &c.op, &c.basis, &cfg).unwrap();
        let err = nmse((&est.h1, &est.h2), (&c.h1, &c.h2)).unwrap();
        assert!(err < 1e-3, "nmse {err}");
        let ls = ls_estimate(&c.obs, &c.front_end, &c.pilots, &c.mask).unwrap();
        let ls_err = nmse((&ls.h1, &ls.h2), (&c.h1, &c.h2)).unwrap();
        assert!(err < 10.0 * ls_err.max(1e-3));
    }

    #[test]
    fn zero_observations_give_zero_estimate() {
        let mut c = digital_case(2, 0.0);
        c.obs.r_matrix.fill(Complex64::default());
        let cfg = AdmmConfig::new(0.1, 0.1, 8, 4).unwrap();
        let est = estimate_channels(&c.obs, &c.op, &c.basis, &cfg).unwrap();
        assert!(frobenius(&est.state.h_bar) < 1e-12);
        assert!(est.converged);
    }

    #[test]
    fn residual_decreases() {
        for seed in 0..50 {
            let c = hybrid_case(100 + seed);
            let mut cfg = AdmmWeights::default().config(0.01, &c.op).unwrap();
            cfg.max_iterations = 100;
            let est = estimate_channels(&c.obs, &c.op, &c.basis, &cfg).unwrap();
            let first = est.trace.first().unwrap().primal_residual;
            let last = est.trace.last().unwrap().primal_residual;
            assert!(last < first, "seed {seed}: {last} >= {first}");
        }
    }

    #[test]
    fn runs_are_bit_identical() {
        let c = hybrid_case(7);
        let cfg = AdmmWeights::default().config(0.01, &c.op).unwrap();
        let a = estimate_channels(&c.obs, &c.op, &c.basis, &cfg).unwrap();
        let b = estimate_channels(&c.obs, &c.op, &c.basis, &cfg).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.state, b.state);
    }

    #[test]
    fn state_shapes_and_initial_values() {
        let s = EstimatorState::zeros(8, 4);
        for m in [&s.h_bar, &s.z_bar, &s.gamma] {
            assert_eq!(m.shape(), (8, 4));
            assert_eq!(frobenius(m), 0.0);
        }
    }

    #[test]
    fn config_validation() {
        assert!(AdmmConfig::new(0.1, 0.1, 8, 4).is_ok());
        let base = AdmmConfig::new(0.1, 0.1, 8, 4).unwrap();
        for bad in [
            AdmmConfig { rho: 1.0, ..base },
            AdmmConfig { rho: 0.0, ..base },
            AdmmConfig { tau_y: 0.0, ..base },
            AdmmConfig { tau_z: -1.0, ..base },
            AdmmConfig { max_iterations: 0, ..base },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let c = digital_case(3, 0.0);
        let other = BeamspaceBasis::new(&ArrayGeometry::upa(2, 2, 0.5).unwrap(), 2, 2);
        let cfg = AdmmConfig::new(0.1, 0.1, 8, 4).unwrap();
        assert!(estimate_channels(&c.obs, &c.op, &other, &cfg).is_err());
    }

    #[test]
    fn weights_scale_with_noise() {
        let c = hybrid_case(9);
        let w = AdmmWeights::default();
        let (y1, z1) = w.resolve(0.01, &c.op);
        let (y2, z2) = w.resolve(0.04, &c.op);
        assert!((y2 / y1 - 2.0).abs() < 1e-12 && (z2 / z1 - 2.0).abs() < 1e-12);
        let sigma = AdmmWeights::effective_noise_std(0.01, &c.op);
        assert!((y1 - 4.0 * sigma).abs() < 1e-15);
    }
}
