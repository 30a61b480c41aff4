//! Multiterminal rate functions: two-decoder systems with side information,
//! successive refinement, function-reproduction decoding, and the common-rate
//! (shared-link) problem — each with its tilted information density and the
//! dual slopes needed for second-order analysis.

mod fy;
mod gw;
mod kaspi;
mod oracle;
mod sr;

pub use fy::{fy_solution, FySolution};
pub use gw::{gw_common_rate, GwSolution, PanglossRecord};
pub use kaspi::{kaspi_rate, KaspiSolution};
pub use oracle::{closed_form_oracle, ClosedFormResult};
pub use sr::{sr_min_sum_rate, SrSolution};
