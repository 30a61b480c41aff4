//! Single-letter solvers for point-to-point rate functions, tilted
//! information densities, and dispersions.
//!
//! The core engine is an alternating-minimization kernel parameterized by the
//! Lagrange slope λ, wrapped in an outer bisection on λ that meets the
//! distortion constraint with equality; λ* is read off as the converged
//! multiplier.

mod ba;
mod channel;
mod cond;
mod noisy;
mod tilted;

pub use ba::{d_range, rate_distortion, RdSolution};
pub use channel::{channel_capacity, ChannelSolution};
pub use cond::{
    conditional_rate_distortion, joint_rate_distortion, CondRdSolution, JointRdSolution,
};
pub use noisy::{noisy_rate_distortion, NoisyRdSolution};
pub use tilted::{tilted_density, TiltedTable};

/// Componentwise Aitken Δ² extrapolation of a geometrically converging
/// iterate, used by the alternating-minimization kernels when the update
/// map's second eigenvalue approaches 1 (weak discrimination or a
/// reproduction symbol leaving the support). Falls back to the latest
/// iterate unless the mode is contracting with a safe denominator.
/// Floor a warm-started probability vector away from zero and renormalize.
/// Warm starts are hints only: a multiplicative update grows an atom by at
/// most e^gap per iteration, so mass that collapsed to ~1e-250 under previous
/// multipliers could never re-enter the support within any budget.
pub(crate) fn floor_simplex(v: &mut [f64]) {
    const FLOOR: f64 = 1e-6;
    let mut s = 0.0;
    for x in v.iter_mut() {
        if !(*x >= FLOOR) {
            *x = FLOOR;
        }
        s += *x;
    }
    for x in v.iter_mut() {
        *x /= s;
    }
}

pub(crate) fn aitken_step(x0: f64, x1: f64, x2: f64) -> f64 {
    let d1 = x1 - x0;
    let d2 = x2 - x1;
    let dd = d2 - d1;
    if !(d2.abs() < d1.abs() && dd.abs() > 1e-300) {
        return x2;
    }
    let cand = x2 - d2 * d2 / dd;
    if cand.is_finite() && cand >= 0.0 {
        cand
    } else {
        x2
    }
}

/// Extrapolate a geometric mode from three equally spaced iterates.
/// A contracting mode (|Δ₂| < |Δ₁|) gets Aitken Δ²; a cleanly expanding one
/// — the logistic escape from a repelling fixed point, whose per-step growth
/// factor can be arbitrarily close to 1 — is advanced 64 further spacings
/// along its geometric trajectory instead, since Δ² would aim back at the
/// repeller. Callers must clamp/renormalize and safeguard the result.
pub(crate) fn geometric_step(x0: f64, x1: f64, x2: f64) -> f64 {
    let d1 = x1 - x0;
    let d2 = x2 - x1;
    if d1 != 0.0 && d1.signum() == d2.signum() {
        let r = d2 / d1;
        if (1.002..=3.0).contains(&r) {
            let cand = x2 + d2 * r * (r.powi(64) - 1.0) / (r - 1.0);
            if cand.is_finite() {
                return cand.clamp(0.0, 1.0);
            }
            return x2;
        }
    }
    aitken_step(x0, x1, x2)
}
