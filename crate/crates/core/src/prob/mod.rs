//! Foundational probability types and scalar special functions.
//!
//! Everything here is a pure function of immutable inputs; all information
//! quantities are in nats with the convention `0 log 0 := 0`. Probabilities
//! below [`SUPPORT_EPS`] are treated as exact zeros for support computations.

mod gauss;
mod info;
mod types;

pub use gauss::{bivariate_normal_cdf, normal_cdf, normal_pdf, q_function, q_inverse};
pub use info::{binary_entropy, entropy, kl_divergence, mutual_information};
pub use types::{CondPmf, Covariance2, DistortionMatrix, JointPmf, Pmf};

/// Mass threshold below which a probability is treated as an exact zero.
pub const SUPPORT_EPS: f64 = 1e-15;
