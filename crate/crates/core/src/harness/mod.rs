//! Seeded Monte Carlo campaigns and their file outputs.

mod config;
mod output;
mod runner;
mod seed;

pub use config::{
    ArchitectureSpec, EstimatorKind, EstimatorSettings, ExperimentConfig, ExperimentKind, GeometryConfig,
    RateSettings, SystemConfig,
};
pub use output::{
    median, results_csv, summarize, summary_csv, write_outputs, Manifest, SummaryRow, RESULTS_HEADER,
    SUMMARY_HEADER,
};
pub use runner::{
    run_convergence_trace, run_experiment, run_nmse_sweep, run_rate_sweep, snr_linear, ResultRecord, RunOptions,
};
pub use seed::{derive_stream_seed, derive_trial_seed, splitmix64};
