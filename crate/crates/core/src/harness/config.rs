//! Experiment configuration, read from TOML.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::AdmmWeights;
use crate::frontend::{Architecture, Resolution};
use crate::geometry::{AngleGrid, ArrayGeometry};
use crate::reflection::PgaConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    ConvergenceTrace,
    NmseVsSnr,
    NmseVsTrainingLength,
    NmseVsPaths,
    RateVsSnr,
}

impl ExperimentKind {
    pub fn id(&self) -> &'static str {
        match self {
            ExperimentKind::ConvergenceTrace => "convergence_trace",
            ExperimentKind::NmseVsSnr => "nmse_vs_snr",
            ExperimentKind::NmseVsTrainingLength => "nmse_vs_training_length",
            ExperimentKind::NmseVsPaths => "nmse_vs_paths",
            ExperimentKind::RateVsSnr => "rate_vs_snr",
        }
    }

    /// Name of the swept quantity; convergence traces sweep SNR internally
    /// and report per iteration.
    pub fn sweep_variable(&self) -> &'static str {
        match self {
            ExperimentKind::ConvergenceTrace => "iteration",
            ExperimentKind::NmseVsSnr | ExperimentKind::RateVsSnr => "snr_db",
            ExperimentKind::NmseVsTrainingLength => "training_length",
            ExperimentKind::NmseVsPaths => "paths",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Admm,
    Ls,
}

/// One estimator/front-end combination evaluated per trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchitectureSpec {
    pub estimator: EstimatorKind,
    pub mode: Architecture,
    pub n_rf: usize,
}

impl ArchitectureSpec {
    pub fn admm(mode: Architecture, n_rf: usize) -> Self {
        Self {
            estimator: EstimatorKind::Admm,
            mode,
            n_rf,
        }
    }

    pub fn ls(mode: Architecture, n_rf: usize) -> Self {
        Self {
            estimator: EstimatorKind::Ls,
            mode,
            n_rf,
        }
    }

    /// Metric suffix, e.g. `admm_pc_nrf4`.
    pub fn label(&self) -> String {
        let est = match self.estimator {
            EstimatorKind::Admm => "admm",
            EstimatorKind::Ls => "ls",
        };
        format!("{est}_{}_nrf{}", self.mode, self.n_rf)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub n_ris: usize,
    /// Explicit UPA shape; otherwise the most square factorization of `n_ris`.
    pub n_ris_y: Option<usize>,
    pub n_ris_z: Option<usize>,
    pub n1: usize,
    pub n2: usize,
    pub paths_p: usize,
    pub paths_q: usize,
    pub training_length: usize,
    pub snr_db: f64,
    pub absorption_bits: Resolution,
    pub angle_grid: AngleGrid,
    pub pilot_power: f64,
    pub element_spacing: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            n_ris: 64,
            n_ris_y: None,
            n_ris_z: None,
            n1: 2,
            n2: 2,
            paths_p: 1,
            paths_q: 1,
            training_length: 512,
            snr_db: 30.0,
            absorption_bits: Resolution::Bits(4),
            angle_grid: AngleGrid::OffGrid,
            pilot_power: 1.0,
            element_spacing: 0.5,
        }
    }
}

impl SystemConfig {
    pub fn ris_geometry(&self) -> Result<ArrayGeometry> {
        match (self.n_ris_y, self.n_ris_z) {
            (Some(y), Some(z)) => {
                if y * z != self.n_ris {
                    return Err(Error::Config(format!(
                        "n_ris_y * n_ris_z = {} does not match n_ris = {}",
                        y * z,
                        self.n_ris
                    )));
                }
                ArrayGeometry::upa(y, z, self.element_spacing)
            }
            (None, None) => ArrayGeometry::square_upa(self.n_ris, self.element_spacing),
            _ => Err(Error::Config("set both n_ris_y and n_ris_z or neither".into())),
        }
    }
}

/// Estimator settings; the regularization weights come from [`AdmmWeights`]
/// unless given explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSettings {
    pub rho: f64,
    pub c_y: f64,
    pub c_z: f64,
    pub tau_y: Option<f64>,
    pub tau_z: Option<f64>,
    pub max_iterations: usize,
    pub tolerance_scale: f64,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        let w = AdmmWeights::default();
        Self {
            rho: crate::estimator::DEFAULT_RHO,
            c_y: w.c_y,
            c_z: w.c_z,
            tau_y: None,
            tau_z: None,
            max_iterations: crate::estimator::DEFAULT_MAX_ITERATIONS,
            tolerance_scale: crate::estimator::DEFAULT_TOLERANCE_SCALE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    /// UE1 to RIS distance in meters.
    pub distance_ue1: f64,
    /// UE2 to RIS distance in meters.
    pub distance_ue2: f64,
    /// UE1 to UE2 distance, used only when the direct link is present.
    pub distance_direct: f64,
    pub pathloss_exponent: f64,
    pub direct_blocked: bool,
    pub direct_paths: usize,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            distance_ue1: 5.0,
            distance_ue2: 5.0,
            distance_direct: 5.0,
            pathloss_exponent: 2.2,
            direct_blocked: true,
            direct_paths: 1,
        }
    }
}

impl GeometryConfig {
    /// Amplitude factor `d^{-a/2}`.
    pub fn amplitude(&self, distance: f64) -> f64 {
        distance.powf(-self.pathloss_exponent / 2.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateSettings {
    pub training_lengths: Vec<usize>,
    pub reflection_bits: Vec<Resolution>,
}

impl Default for RateSettings {
    fn default() -> Self {
        Self {
            training_lengths: vec![256, 1024],
            reflection_bits: vec![Resolution::Infinite],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// SNR values in dB, training lengths or path counts depending on the
    /// experiment. Convergence traces take SNR values here.
    pub sweep: Vec<f64>,
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default = "default_architectures")]
    pub architectures: Vec<ArchitectureSpec>,
    #[serde(default)]
    pub estimator: EstimatorSettings,
    #[serde(default)]
    pub optimizer: PgaConfig,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub rate: RateSettings,
}

fn default_trials() -> usize {
    100
}

fn default_architectures() -> Vec<ArchitectureSpec> {
    vec![ArchitectureSpec::admm(Architecture::PartiallyConnected, 4)]
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let s = &self.system;
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.sweep.is_empty() {
            return bad("sweep must list at least one value".into());
        }
        if self.architectures.is_empty() {
            return bad("at least one architecture is required".into());
        }
        if s.n_ris == 0 || s.n1 == 0 || s.n2 == 0 {
            return bad("n_ris, n1 and n2 must be positive".into());
        }
        if s.paths_p == 0 || s.paths_q == 0 {
            return bad("paths_p and paths_q must be positive".into());
        }
        if s.training_length == 0 {
            return bad("training_length must be positive".into());
        }
        if !(s.pilot_power > 0.0 && s.pilot_power.is_finite()) {
            return bad(format!("pilot_power must be positive, got {}", s.pilot_power));
        }
        if !(s.element_spacing > 0.0) {
            return bad("element_spacing must be positive".into());
        }
        if s.absorption_bits == Resolution::Bits(0) || s.absorption_bits == Resolution::Bits(1) {
            return bad("absorption_bits must be at least 2 for an invertible profile bank".into());
        }
        s.ris_geometry()?;
        for arch in &self.architectures {
            if arch.n_rf == 0 || arch.n_rf > s.n_ris {
                return bad(format!("n_rf = {} must lie in 1..={}", arch.n_rf, s.n_ris));
            }
            if arch.mode == Architecture::PartiallyConnected && s.n_ris % arch.n_rf != 0 {
                return bad(format!(
                    "partially-connected mode needs n_ris divisible by n_rf: {} is not divisible by {}",
                    s.n_ris, arch.n_rf
                ));
            }
        }
        let e = &self.estimator;
        if !(e.rho > 0.0 && e.rho < 1.0) {
            return bad(format!("estimator.rho must lie in (0, 1), got {}", e.rho));
        }
        if e.max_iterations == 0 {
            return bad("estimator.max_iterations must be positive".into());
        }
        if !(e.tolerance_scale > 0.0) || !(e.c_y > 0.0) || !(e.c_z > 0.0) {
            return bad("estimator weights and tolerance must be positive".into());
        }
        for (name, v) in [("tau_y", e.tau_y), ("tau_z", e.tau_z)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return bad(format!("estimator.{name} must be positive, got {v}"));
                }
            }
        }
        self.optimizer.validate().map_err(|e| Error::Config(e.to_string()))?;
        let g = &self.geometry;
        if !(g.distance_ue1 > 0.0 && g.distance_ue2 > 0.0 && g.distance_direct > 0.0) {
            return bad("distances must be positive".into());
        }
        if !(g.pathloss_exponent >= 0.0) {
            return bad("pathloss_exponent must be non-negative".into());
        }
        if !g.direct_blocked && g.direct_paths == 0 {
            return bad("direct_paths must be positive when the direct link is present".into());
        }

        match self.experiment {
            ExperimentKind::NmseVsTrainingLength => {
                for &v in &self.sweep {
                    if !(v >= 1.0 && v.fract() == 0.0) {
                        return bad(format!("training-length sweep values must be positive integers, got {v}"));
                    }
                }
            }
            ExperimentKind::NmseVsPaths => {
                for &v in &self.sweep {
                    if !(v >= 1.0 && v.fract() == 0.0) {
                        return bad(format!("path-count sweep values must be positive integers, got {v}"));
                    }
                }
            }
            ExperimentKind::ConvergenceTrace | ExperimentKind::NmseVsSnr | ExperimentKind::RateVsSnr => {
                for &v in &self.sweep {
                    if v.is_nan() || v == f64::INFINITY {
                        return bad(format!("invalid SNR value {v} dB"));
                    }
                }
            }
        }
        if self.experiment == ExperimentKind::RateVsSnr {
            if self.rate.training_lengths.iter().any(|&t| t == 0) {
                return bad("rate.training_lengths must be positive".into());
            }
            if self.rate.reflection_bits.is_empty() {
                return bad("rate.reflection_bits must list at least one resolution".into());
            }
            if self.rate.reflection_bits.contains(&Resolution::Bits(0)) {
                return bad("reflection resolution must be at least one bit".into());
            }
        }
        Ok(())
    }

    /// Estimator weights for the configured multipliers.
    pub fn weights(&self) -> AdmmWeights {
        AdmmWeights {
            c_y: self.estimator.c_y,
            c_z: self.estimator.c_z,
        }
    }

    /// Fully-digital convergence run on a 64-element surface.
    pub fn desk_convergence() -> Self {
        Self {
            experiment: ExperimentKind::ConvergenceTrace,
            trials: 20,
            master_seed: 1,
            sweep: vec![10.0, 30.0],
            system: SystemConfig::default(),
            architectures: vec![
                ArchitectureSpec::admm(Architecture::FullyConnected, 64),
                ArchitectureSpec::ls(Architecture::FullyConnected, 64),
                ArchitectureSpec::admm(Architecture::PartiallyConnected, 4),
                ArchitectureSpec::admm(Architecture::FullyConnected, 1),
            ],
            estimator: EstimatorSettings {
                max_iterations: 300,
                ..EstimatorSettings::default()
            },
            optimizer: PgaConfig::default(),
            geometry: GeometryConfig::default(),
            rate: RateSettings::default(),
        }
    }

    /// NMSE versus SNR with three paths per link.
    pub fn desk_nmse() -> Self {
        Self {
            experiment: ExperimentKind::NmseVsSnr,
            trials: 100,
            master_seed: 1,
            sweep: vec![0.0, 10.0, 20.0, 30.0],
            system: SystemConfig {
                paths_p: 3,
                paths_q: 3,
                ..SystemConfig::default()
            },
            architectures: vec![
                ArchitectureSpec::admm(Architecture::FullyConnected, 4),
                ArchitectureSpec::admm(Architecture::PartiallyConnected, 4),
                ArchitectureSpec::admm(Architecture::FullyConnected, 1),
            ],
            estimator: EstimatorSettings {
                max_iterations: 300,
                ..EstimatorSettings::default()
            },
            optimizer: PgaConfig::default(),
            geometry: GeometryConfig::default(),
            rate: RateSettings::default(),
        }
    }

    /// Rate versus SNR on a 36-element surface with a blocked direct link.
    pub fn desk_rate() -> Self {
        Self {
            experiment: ExperimentKind::RateVsSnr,
            trials: 100,
            master_seed: 1,
            sweep: vec![0.0, 10.0, 20.0, 30.0],
            system: SystemConfig {
                n_ris: 36,
                n1: 4,
                n2: 2,
                paths_p: 3,
                paths_q: 3,
                ..SystemConfig::default()
            },
            architectures: vec![ArchitectureSpec::admm(Architecture::PartiallyConnected, 1)],
            estimator: EstimatorSettings {
                max_iterations: 300,
                ..EstimatorSettings::default()
            },
            optimizer: PgaConfig::default(),
            geometry: GeometryConfig::default(),
            rate: RateSettings {
                training_lengths: vec![256, 1024],
                reflection_bits: vec![Resolution::Infinite, Resolution::Bits(2), Resolution::Bits(3)],
            },
        }
    }
}
