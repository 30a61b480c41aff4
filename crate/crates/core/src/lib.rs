//! Finite-blocklength lossy source coding toolkit.
//!
//! Computes rate-distortion functions and their tilted information densities,
//! dispersions, exact non-asymptotic achievability/converse bounds, and
//! second-order asymptotic expansions for a family of point-to-point and
//! multiterminal source coding problems, together with Monte Carlo
//! random-codebook simulation for empirical cross-checks.
//!
//! All rates are in nats unless a caller converts at the boundary.

pub mod bounds;
pub mod error;
pub mod mt;
pub mod prob;
pub mod rd;
pub mod second;
pub mod sim;

pub use error::FblscError;
pub use prob::{CondPmf, Covariance2, DistortionMatrix, JointPmf, Pmf};
pub use rd::{ChannelSolution, NoisyRdSolution, RdSolution, TiltedTable};
pub use mt::{FySolution, GwSolution, KaspiSolution, SrSolution};

