//! Joint low-rank + sparse channel estimation at the receiving RIS.

mod admm;
mod ls;
mod metrics;
mod operator;
mod prox;

pub use admm::{
    DEFAULT_MAX_ITERATIONS, DEFAULT_RHO, DEFAULT_TOLERANCE_SCALE, estimate_channels, estimate_channels_observed, AdmmConfig, AdmmWeights, ChannelEstimate,
    EstimatorState, IterationRecord,
};
pub use ls::{ls_estimate, LsEstimate};
pub use metrics::{nmse, nmse_db};
pub use operator::{build_structured_operator, StructuredOperator};
pub use prox::{soft_threshold, soft_threshold_matrix, soft_threshold_scalar, svt};
