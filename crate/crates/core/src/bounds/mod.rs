//! Exact evaluation of computable non-asymptotic achievability and converse
//! bounds for i.i.d. discrete sources.
//!
//! The engine is exact enumeration of empirical compositions (types) with
//! log-space multinomial weights; per-symbol values equal within 1e-12 are
//! merged first, which collapses binary-symmetric cases to a plain binomial.

mod fixed;
mod mt_bounds;
mod tail;
mod vl;

pub use fixed::{lossless_bounds, rd_achievability_bms, rd_converse, BoundPoint};
pub use mt_bounds::{fy_converse, kaspi_converse, sr_converse};
pub use tail::{exact_sum_tail, union_tail_prob, TailDistribution};
pub use vl::{epsilon_cutoff_mean, vl_achievability_bms};
