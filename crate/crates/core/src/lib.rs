//! Simulation library for receiving (semi-passive) reconfigurable intelligent
//! surfaces.
//!
//! The RIS absorbs non-orthogonal pilots from two multi-antenna UEs through
//! Lorentzian-constrained absorption profiles, estimates both UE-RIS channels
//! with a joint low-rank + sparse ADMM, and then configures its reflection
//! phases by projected gradient ascent on the MIMO rate.
//!
//! Modules, bottom-up:
//! - [`geometry`]: steering vectors, geometric multipath channels, DFT beamspace.
//! - [`frontend`]: codebooks, waveguide matrix, profile banks, masks, pilots, observations.
//! - [`estimator`]: SVT, soft thresholding, the structured pseudoinverse, ADMM, LS, NMSE.
//! - [`reflection`]: end-to-end channel, rate, gradient, PGA, quantization.
//! - [`harness`]: experiment configs, seeded Monte Carlo runners, CSV/JSON output.

pub mod error;
pub mod estimator;
pub mod frontend;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod reflection;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector};
