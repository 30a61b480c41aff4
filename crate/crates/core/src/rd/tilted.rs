//! D-tilted information density and its moments.

use crate::error::Result;
use crate::prob::{DistortionMatrix, Pmf};

use super::ba::RdSolution;

/// Per-symbol tilted information density values with the moments that drive
/// every second-order expansion.
#[derive(Debug, Clone)]
pub struct TiltedTable {
    /// ȷ(x) in nats, one entry per source symbol (or flattened pair).
    pub values: Vec<f64>,
    /// E[ȷ(X)] — equals the rate of the underlying solution.
    pub mean: f64,
    /// Var[ȷ(X)], the dispersion, nats².
    pub variance: f64,
    /// E|ȷ(X) − E ȷ|³, nats³ (Berry-Esseen input).
    pub third_abs_moment: f64,
}

impl TiltedTable {
    /// Assemble moments from per-symbol values and their weights.
    pub fn from_values(values: Vec<f64>, weights: &[f64]) -> Self {
        let mean: f64 = values.iter().zip(weights).map(|(v, w)| v * w).sum();
        let variance: f64 = values
            .iter()
            .zip(weights)
            .map(|(v, w)| w * (v - mean).powi(2))
            .sum::<f64>()
            .max(0.0);
        let third_abs_moment: f64 = values
            .iter()
            .zip(weights)
            .map(|(v, w)| w * (v - mean).abs().powi(3))
            .sum();
        Self {
            values,
            mean,
            variance,
            third_abs_moment,
        }
    }
}

/// D-tilted information density ȷ(x|D,P_X) = −log E_{P*_X̂}[exp(λ*D − λ*d(x,X̂))].
///
/// The reproduction marginal is support-pruned at 1e-12 before evaluation.
pub fn tilted_density(
    sol: &RdSolution,
    p: &Pmf,
    d: &DistortionMatrix,
    big_d: f64,
) -> Result<TiltedTable> {
    let lambda = sol.lambda_star;
    if lambda == 0.0 {
        // Degenerate D ≥ D_max regime: ȷ ≡ 0.
        return Ok(TiltedTable::from_values(vec![0.0; p.len()], p.probs()));
    }
    let r = sol.repro_marginal.probs();
    let support: Vec<usize> = (0..r.len()).filter(|&i| r[i] > 1e-12).collect();
    let values: Vec<f64> = (0..p.len())
        .map(|x| {
            let s: f64 = support
                .iter()
                .map(|&xh| r[xh] * (lambda * big_d - lambda * d.get(x, xh)).exp())
                .sum();
            -s.ln()
        })
        .collect();
    Ok(TiltedTable::from_values(values, p.probs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::binary_entropy;
    use crate::rd::rate_distortion;

    #[test]
    fn bms_tilted_closed_form() {
        // For BMS: ȷ(x) = ı(x|P_X) − H_b(D).
        let p = Pmf::bernoulli(0.2).unwrap();
        let d = DistortionMatrix::hamming(2).unwrap();
        let sol = rate_distortion(&p, &d, 0.1).unwrap();
        let t = tilted_density(&sol, &p, &d, 0.1).unwrap();
        let hb = binary_entropy(0.1);
        assert!((t.values[0] - (-(0.8f64).ln() - hb)).abs() < 1e-6);
        assert!((t.values[1] - (-(0.2f64).ln() - hb)).abs() < 1e-6);
        assert!((t.mean - sol.rate).abs() < 1e-8);
        // V = p(1−p) log²((1−p)/p).
        let v = 0.2 * 0.8 * (0.8f64 / 0.2).ln().powi(2);
        assert!((t.variance - v).abs() < 1e-6);
    }

    #[test]
    fn degenerate_is_zero() {
        let p = Pmf::bernoulli(0.2).unwrap();
        let d = DistortionMatrix::hamming(2).unwrap();
        let sol = rate_distortion(&p, &d, 0.5).unwrap();
        let t = tilted_density(&sol, &p, &d, 0.5).unwrap();
        assert!(t.values.iter().all(|&v| v == 0.0));
        assert_eq!(t.variance, 0.0);
    }

    #[test]
    fn tilted_identity_and_exp_inequality() {
        // Identity (i): ȷ(x) = log(q/r) + λd − λD for x̂ in supp;
        // inequality (iii): E[exp(λD − λd + ȷ)] ≤ 1, equality on supp.
        let p = Pmf::from_probs(&[1.0 / 3.0, 0.25, 0.25, 1.0 / 6.0]).unwrap();
        let d = DistortionMatrix::hamming(4).unwrap();
        let big_d = 0.3;
        let sol = rate_distortion(&p, &d, big_d).unwrap();
        let t = tilted_density(&sol, &p, &d, big_d).unwrap();
        assert!((t.mean - sol.rate).abs() < 1e-8);
        let lam = sol.lambda_star;
        let r = sol.repro_marginal.probs();
        for xh in 0..4 {
            let u: f64 = (0..4)
                .map(|x| {
                    p.prob(x)
                        * (lam * big_d - lam * d.get(x, xh) + t.values[x]).exp()
                })
                .sum();
            assert!(u <= 1.0 + 1e-7, "xh={xh}: u={u}");
            if r[xh] > 1e-9 {
                assert!((u - 1.0).abs() < 1e-6, "xh={xh}: u={u}");
                for x in 0..4 {
                    let q = sol.test_channel.prob(x, xh);
                    if q > 1e-12 {
                        let ident = (q / r[xh]).ln() + lam * d.get(x, xh) - lam * big_d;
                        assert!((t.values[x] - ident).abs() < 1e-6);
                    }
                }
            }
        }
    }
}
