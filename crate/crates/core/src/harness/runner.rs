//! Monte Carlo runners for the experiment families.
//!
//! Every (sweep point, trial) pair is an independent task seeded through
//! [`derive_trial_seed`]. Within a trial the channels and pilots are shared by
//! all architecture variants; each front end draws its profile bank, mask and
//! noise from its own sub-stream, so an ADMM and an LS variant on the same
//! front end see the same observations.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::{
    build_structured_operator, estimate_channels_observed, ls_estimate, nmse, AdmmConfig,
};
use crate::frontend::{
    build_codebook, generate_pilots, sample_selection_mask, synthesize_observations, Architecture,
    FrontEndModel, PilotBlock,
};
use crate::geometry::{sample_channel, sample_ula_link, split_channels, ArrayGeometry, BeamspaceBasis};
use crate::linalg::CMatrix;
use crate::reflection::{apply_resolution, optimize_reflection, rate, LinkSet, PhaseVector};

use super::config::{ArchitectureSpec, EstimatorKind, ExperimentConfig, ExperimentKind, SystemConfig};
use super::seed::{derive_stream_seed, derive_trial_seed};

/// One output row. Column order matches the result CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub experiment: &'static str,
    pub sweep_variable: &'static str,
    pub sweep_value: f64,
    pub trial: usize,
    pub seed: u64,
    pub metric: String,
    pub value: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads; 0 picks the rayon default.
    pub threads: usize,
    /// Record per-row wall time. Off by default so repeated runs are
    /// byte-identical.
    pub timing: bool,
}

pub fn run_experiment(config: &ExperimentConfig, options: &RunOptions) -> Result<Vec<ResultRecord>> {
    match config.experiment {
        ExperimentKind::ConvergenceTrace => run_convergence_trace(config, options),
        ExperimentKind::RateVsSnr => run_rate_sweep(config, options),
        _ => run_nmse_sweep(config, options),
    }
}

pub fn snr_linear(snr_db: f64) -> f64 {
    10f64.powf(snr_db / 10.0)
}

/// Runs `task(sweep_index, trial)` over the whole grid, in parallel, and
/// concatenates the rows in (sweep index, trial) order.
fn run_grid<F>(config: &ExperimentConfig, options: &RunOptions, task: F) -> Result<Vec<ResultRecord>>
where
    F: Fn(usize, usize, u64) -> Result<Vec<ResultRecord>> + Sync,
{
    config.validate()?;
    let jobs: Vec<(usize, usize)> = (0..config.sweep.len())
        .flat_map(|s| (0..config.trials).map(move |t| (s, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build thread pool: {e}")))?;
    let chunks: Vec<Vec<ResultRecord>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(s, t)| task(s, t, derive_trial_seed(config.master_seed, s as u64, t as u64)))
            .collect::<Result<Vec<_>>>()
    })?;
    // indexed collect keeps job order, so rows are sorted by (sweep index, trial)
    Ok(chunks.into_iter().flatten().collect())
}

struct Arrays {
    ris: ArrayGeometry,
    ue1: ArrayGeometry,
    ue2: ArrayGeometry,
    basis: BeamspaceBasis,
}

impl Arrays {
    fn new(system: &SystemConfig) -> Result<Self> {
        let ris = system.ris_geometry()?;
        let ue1 = ArrayGeometry::ula(system.n1, system.element_spacing)?;
        let ue2 = ArrayGeometry::ula(system.n2, system.element_spacing)?;
        let basis = BeamspaceBasis::new(&ris, system.n1, system.n2);
        Ok(Self { ris, ue1, ue2, basis })
    }

    fn draw_channels(&self, system: &SystemConfig, p: usize, q: usize, rng: &mut ChaCha8Rng) -> Result<(CMatrix, CMatrix)> {
        let (h1, _) = sample_channel(&self.ue1, &self.ris, p, system.angle_grid, rng)?;
        let (h2, _) = sample_channel(&self.ue2, &self.ris, q, system.angle_grid, rng)?;
        Ok((h1, h2))
    }
}

fn stream_of(arch: &ArchitectureSpec) -> u64 {
    let mode = match arch.mode {
        Architecture::PartiallyConnected => 0u64,
        Architecture::FullyConnected => 1u64,
    };
    (mode << 32) | arch.n_rf as u64
}

/// Estimates `(Ĥ1, Ĥ2)` for one architecture variant; `observer` sees every
/// ADMM iterate.
#[allow(clippy::too_many_arguments)]
fn estimate_variant(
    config: &ExperimentConfig,
    arch: &ArchitectureSpec,
    arrays: &Arrays,
    h1: &CMatrix,
    h2: &CMatrix,
    pilots: &PilotBlock,
    noise_variance: f64,
    trial_seed: u64,
    observer: &mut dyn FnMut(usize, &CMatrix),
) -> Result<(CMatrix, CMatrix)> {
    let system = &config.system;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_stream_seed(trial_seed, stream_of(arch)));
    let codebook = build_codebook(system.absorption_bits)?;
    let front_end = FrontEndModel::draw(arch.mode, system.n_ris, arch.n_rf, codebook, None, &mut rng)?;
    let mask = sample_selection_mask(system.n_ris, arch.n_rf, pilots.t_slots(), &mut rng)?;
    let obs = synthesize_observations(h1, h2, pilots, &front_end, &mask, noise_variance, &mut rng)?;
    match arch.estimator {
        EstimatorKind::Ls => {
            let est = ls_estimate(&obs, &front_end, pilots, &mask)?;
            Ok((est.h1, est.h2))
        }
        EstimatorKind::Admm => {
            let e = &config.estimator;
            let op = build_structured_operator(&front_end, &arrays.basis, pilots, &mask, e.rho)?;
            let (tau_y, tau_z) = config.weights().resolve(noise_variance, &op);
            let admm = AdmmConfig {
                rho: e.rho,
                tau_y: e.tau_y.unwrap_or(tau_y),
                tau_z: e.tau_z.unwrap_or(tau_z),
                max_iterations: e.max_iterations,
                primal_tolerance: e.tolerance_scale * ((op.n_ris() * op.n_ues()) as f64).sqrt(),
            };
            let est = estimate_channels_observed(&obs, &op, &arrays.basis, &admm, observer)?;
            Ok((est.h1, est.h2))
        }
    }
}

fn elapsed_ms(start: Instant, options: &RunOptions) -> f64 {
    if options.timing {
        start.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    }
}

/// NMSE against SNR, training length or path count.
pub fn run_nmse_sweep(config: &ExperimentConfig, options: &RunOptions) -> Result<Vec<ResultRecord>> {
    let kind = config.experiment;
    if !matches!(
        kind,
        ExperimentKind::NmseVsSnr | ExperimentKind::NmseVsTrainingLength | ExperimentKind::NmseVsPaths
    ) {
        return Err(Error::Config(format!("{kind} is not an NMSE sweep")));
    }
    let arrays = Arrays::new(&config.system)?;
    run_grid(config, options, |s, trial, seed| {
        let value = config.sweep[s];
        let sys = &config.system;
        let (snr_db, t_slots, p, q) = match kind {
            ExperimentKind::NmseVsSnr => (value, sys.training_length, sys.paths_p, sys.paths_q),
            ExperimentKind::NmseVsTrainingLength => (sys.snr_db, value as usize, sys.paths_p, sys.paths_q),
            _ => (sys.snr_db, sys.training_length, value as usize, value as usize),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (h1, h2) = arrays.draw_channels(sys, p, q, &mut rng)?;
        let pilots = generate_pilots(sys.n1, sys.n2, t_slots, sys.pilot_power, &mut rng)?;
        let noise_variance = sys.pilot_power / snr_linear(snr_db);
        let mut rows = Vec::with_capacity(config.architectures.len());
        for arch in &config.architectures {
            let start = Instant::now();
            let (e1, e2) = estimate_variant(config, arch, &arrays, &h1, &h2, &pilots, noise_variance, seed, &mut |_, _| {})?;
            rows.push(ResultRecord {
                experiment: kind.id(),
                sweep_variable: kind.sweep_variable(),
                sweep_value: value,
                trial,
                seed,
                metric: format!("nmse.{}", arch.label()),
                value: nmse((&e1, &e2), (&h1, &h2))?,
                wall_ms: elapsed_ms(start, options),
            });
        }
        Ok(rows)
    })
}

/// Per-iteration NMSE of every variant at each swept SNR. Rows carry the
/// iteration as the sweep value and the SNR in the metric name. Runs that stop
/// early repeat their final NMSE up to the iteration cap; LS variants report
/// their single estimate at every iteration.
pub fn run_convergence_trace(config: &ExperimentConfig, options: &RunOptions) -> Result<Vec<ResultRecord>> {
    if config.experiment != ExperimentKind::ConvergenceTrace {
        return Err(Error::Config(format!("{} is not a convergence trace", config.experiment)));
    }
    let arrays = Arrays::new(&config.system)?;
    let cap = config.estimator.max_iterations;
    let kind = config.experiment;
    run_grid(config, options, |s, trial, seed| {
        let snr_db = config.sweep[s];
        let sys = &config.system;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (h1, h2) = arrays.draw_channels(sys, sys.paths_p, sys.paths_q, &mut rng)?;
        let pilots = generate_pilots(sys.n1, sys.n2, sys.training_length, sys.pilot_power, &mut rng)?;
        let noise_variance = sys.pilot_power / snr_linear(snr_db);
        let n1 = sys.n1;
        let mut rows = Vec::with_capacity(config.architectures.len() * cap);
        for arch in &config.architectures {
            let start = Instant::now();
            let mut curve: Vec<f64> = Vec::with_capacity(cap);
            let mut failure = None;
            let mut observer = |_: usize, h_bar: &CMatrix| {
                let (a, b) = split_channels(h_bar, n1);
                match nmse((&a, &b), (&h1, &h2)) {
                    Ok(v) => curve.push(v),
                    Err(e) => failure = Some(e),
                }
            };
            let (e1, e2) = estimate_variant(config, arch, &arrays, &h1, &h2, &pilots, noise_variance, seed, &mut observer)?;
            if let Some(e) = failure {
                return Err(e);
            }
            let last = match curve.last() {
                Some(v) => *v,
                None => nmse((&e1, &e2), (&h1, &h2))?,
            };
            curve.resize(cap, last);
            let wall = elapsed_ms(start, options);
            for (i, v) in curve.into_iter().enumerate() {
                rows.push(ResultRecord {
                    experiment: kind.id(),
                    sweep_variable: kind.sweep_variable(),
                    sweep_value: (i + 1) as f64,
                    trial,
                    seed,
                    metric: format!("nmse.{}@{}dB", arch.label(), snr_db),
                    value: v,
                    wall_ms: wall,
                });
            }
        }
        Ok(rows)
    })
}

/// Achievable rate with true channels (perfect CSI) and with ADMM estimates
/// (imperfect CSI), for every training length and reflection resolution.
/// The optimized phases are always scored on the true channels.
pub fn run_rate_sweep(config: &ExperimentConfig, options: &RunOptions) -> Result<Vec<ResultRecord>> {
    if config.experiment != ExperimentKind::RateVsSnr {
        return Err(Error::Config(format!("{} is not a rate sweep", config.experiment)));
    }
    let arrays = Arrays::new(&config.system)?;
    let arch = config.architectures[0];
    let kind = config.experiment;
    run_grid(config, options, |s, trial, seed| {
        let snr_db = config.sweep[s];
        let snr = snr_linear(snr_db);
        let sys = &config.system;
        let geo = &config.geometry;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (h1, h2) = arrays.draw_channels(sys, sys.paths_p, sys.paths_q, &mut rng)?;
        let h1 = h1 * num_complex::Complex64::from(geo.amplitude(geo.distance_ue1));
        let h2 = h2 * num_complex::Complex64::from(geo.amplitude(geo.distance_ue2));
        let direct = if geo.direct_blocked {
            CMatrix::zeros(sys.n2, sys.n1)
        } else {
            sample_ula_link(sys.n2, sys.n1, geo.direct_paths, &mut rng)?
                * num_complex::Complex64::from(geo.amplitude(geo.distance_direct))
        };
        let init: Vec<f64> = (0..sys.n_ris).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        let truth = LinkSet::new(direct, h1.clone(), h2.clone(), snr)?;

        let mut rows = Vec::new();
        let mut emit = |metric: String, value: f64, wall_ms: f64| {
            rows.push(ResultRecord {
                experiment: kind.id(),
                sweep_variable: kind.sweep_variable(),
                sweep_value: snr_db,
                trial,
                seed,
                metric,
                value,
                wall_ms,
            });
        };
        let score = |links: &LinkSet| -> Result<PhaseVector> {
            Ok(optimize_reflection(links, &config.optimizer, &init)?.phases)
        };

        let start = Instant::now();
        let perfect = score(&truth)?;
        for &bits in &config.rate.reflection_bits {
            let value = rate(&truth, &apply_resolution(&perfect, bits)?)?;
            emit(format!("rate_bits.perfect_b{bits}"), value, elapsed_ms(start, options));
        }

        for &t_slots in &config.rate.training_lengths {
            let start = Instant::now();
            let phases = if snr > 0.0 {
                let pilots = generate_pilots(sys.n1, sys.n2, t_slots, sys.pilot_power, &mut rng)?;
                let noise_variance = sys.pilot_power / snr;
                let stream_seed = derive_stream_seed(seed, 1 << 40 | t_slots as u64);
                let (e1, e2) =
                    estimate_variant(config, &arch, &arrays, &h1, &h2, &pilots, noise_variance, stream_seed, &mut |_, _| {})?;
                score(&truth.with_reflected(e1, e2)?)?
            } else {
                // nothing is observed at zero SNR
                PhaseVector::from_angles(&init)
            };
            for &bits in &config.rate.reflection_bits {
                let value = rate(&truth, &apply_resolution(&phases, bits)?)?;
                emit(format!("rate_bits.imperfect_T{t_slots}_b{bits}"), value, elapsed_ms(start, options));
            }
        }
        Ok(rows)
    })
}
