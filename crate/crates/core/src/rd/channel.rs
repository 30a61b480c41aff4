//! Channel capacity and dispersion by alternating maximization.

use crate::error::{FblscError, Result};
use crate::prob::{CondPmf, Pmf, SUPPORT_EPS};

/// Capacity, capacity-achieving output distribution, and channel dispersion.
#[derive(Debug, Clone)]
pub struct ChannelSolution {
    /// C(P_{Z|Y}) in nats per channel use.
    pub capacity: f64,
    /// Capacity-achieving output distribution P*_Z (unique).
    pub caod: Pmf,
    /// Capacity-achieving input distribution (one maximizer).
    pub input: Pmf,
    /// V_c = Var[log(P_{Z|Y}(Z|Y)/P*_Z(Z))] under the maximizing input.
    pub dispersion_vc: f64,
}

/// Arimoto-Blahut capacity computation to within 1e-10, plus the channel
/// dispersion under the returned maximizing input.
pub fn channel_capacity(ch: &CondPmf) -> Result<ChannelSolution> {
    let ni = ch.n_inputs();
    let no = ch.n_outputs();
    let mut p = vec![1.0 / ni as f64; ni];
    let mut cap = 0.0;
    let mut q = vec![0.0; no];
    for iter in 0..200_000 {
        for z in 0..no {
            q[z] = (0..ni).map(|y| p[y] * ch.prob(y, z)).sum();
        }
        // D_y = D(W(·|y) ‖ q): per-input relative entropy to the current output.
        let dy: Vec<f64> = (0..ni)
            .map(|y| {
                (0..no)
                    .filter(|&z| ch.prob(y, z) > SUPPORT_EPS)
                    .map(|z| ch.prob(y, z) * (ch.prob(y, z) / q[z]).ln())
                    .collect::<Vec<_>>()
                    .iter()
                    .sum()
            })
            .collect();
        let i_lower: f64 = (0..ni).map(|y| p[y] * dy[y]).sum();
        let i_upper = dy.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        cap = i_lower;
        if i_upper - i_lower < 1e-11 {
            break;
        }
        // Multiplicative update p(y) ∝ p(y) exp(D_y).
        let m = i_upper;
        let mut s = 0.0;
        for y in 0..ni {
            p[y] *= (dy[y] - m).exp();
            s += p[y];
        }
        for v in &mut p {
            *v /= s;
        }
        if iter == 199_999 {
            return Err(FblscError::ConvergenceFailure {
                iterations: 200_000,
                residual: i_upper - i_lower,
            });
        }
    }
    cap = cap.max(0.0);

    // V_c under the converged input and the capacity-achieving output law.
    let mut vc = 0.0;
    for y in 0..ni {
        if p[y] <= SUPPORT_EPS {
            continue;
        }
        for z in 0..no {
            let w = ch.prob(y, z);
            if w > SUPPORT_EPS {
                let info = (w / q[z]).ln();
                vc += p[y] * w * (info - cap).powi(2);
            }
        }
    }
    Ok(ChannelSolution {
        capacity: cap,
        caod: Pmf::new(ch.output_labels().to_vec(), q)?,
        input: Pmf::new(ch.input_labels().to_vec(), p)?,
        dispersion_vc: vc.max(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::binary_entropy;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn bsc_capacity() {
        let sol = channel_capacity(&CondPmf::bsc(0.1).unwrap()).unwrap();
        assert!((sol.capacity - (LN2 - binary_entropy(0.1))).abs() < 1e-9);
        // Symmetric channel: V_c = Var of log(W/q*) under uniform input.
        let w: f64 = 0.9;
        let want_vc = 0.9 * ((2.0 * w).ln() - sol.capacity).powi(2)
            + 0.1 * ((2.0 * 0.1f64).ln() - sol.capacity).powi(2);
        assert!((sol.dispersion_vc - want_vc).abs() < 1e-8);
    }

    #[test]
    fn noiseless_and_useless() {
        let sol = channel_capacity(&CondPmf::identity(2).unwrap()).unwrap();
        assert!((sol.capacity - LN2).abs() < 1e-10);
        assert!(sol.dispersion_vc.abs() < 1e-9);
        let sol = channel_capacity(&CondPmf::bsc(0.5).unwrap()).unwrap();
        assert!(sol.capacity.abs() < 1e-10);
    }
}
