//! Fixed-length non-asymptotic bounds: lossless compression and
//! rate-distortion (converse for general discrete sources, exact
//! achievability for the binary-Hamming case).

use crate::error::{FblscError, Result};
use crate::prob::{Pmf, SUPPORT_EPS};
use crate::rd::TiltedTable;

use super::tail::exact_sum_tail;

/// One operating point of an achievability/converse bound pair.
#[derive(Debug, Clone, Copy)]
pub struct BoundPoint {
    pub n: usize,
    pub log_m: f64,
    /// Achievable excess/error probability (upper bound), clamped to [0,1].
    pub ach_upper: f64,
    /// Converse bound (lower bound on error probability), clamped to [0,1].
    pub conv_lower: f64,
    /// Raw pre-clamp converse value, for diagnostics.
    pub conv_raw: f64,
}

/// Exact lossless bounds: ach = Pr{Σ ı(Xᵢ) ≥ log M},
/// conv = Pr{Σ ı(Xᵢ) ≥ log M + nγ} − exp(−nγ).
pub fn lossless_bounds(p: &Pmf, n: usize, log_m: f64, gamma: f64) -> Result<BoundPoint> {
    if gamma <= 0.0 {
        return Err(FblscError::DomainError(
            "converse slack gamma must be positive".into(),
        ));
    }
    let info: Vec<f64> = p
        .probs()
        .iter()
        .map(|&q| if q > SUPPORT_EPS { -q.ln() } else { 0.0 })
        .collect();
    let ach = exact_sum_tail(&info, p.probs(), n, log_m)?;
    let conv_raw =
        exact_sum_tail(&info, p.probs(), n, log_m + n as f64 * gamma)? - (-(n as f64) * gamma).exp();
    Ok(BoundPoint {
        n,
        log_m,
        ach_upper: ach,
        conv_lower: conv_raw.clamp(0.0, 1.0),
        conv_raw,
    })
}

/// Rate-distortion converse: Pr{Σ ȷ(Xᵢ) ≥ log M + nγ} − exp(−nγ), exact.
pub fn rd_converse(
    tilted: &TiltedTable,
    p: &Pmf,
    n: usize,
    log_m: f64,
    gamma: f64,
) -> Result<f64> {
    if gamma <= 0.0 {
        return Err(FblscError::DomainError(
            "converse slack gamma must be positive".into(),
        ));
    }
    let raw = exact_sum_tail(&tilted.values, p.probs(), n, log_m + n as f64 * gamma)?
        - (-(n as f64) * gamma).exp();
    Ok(raw.clamp(0.0, 1.0))
}

/// Exact random-coding achievability for BMS(p) under Hamming distortion with
/// the optimal product reproduction distribution:
/// E[(1 − P*ⁿ(ℬ_D(Xⁿ)))^M].
pub fn rd_achievability_bms(p: f64, big_d: f64, n: usize, log_m: f64) -> Result<f64> {
    if !(0.0 < p && p < 1.0) || big_d < 0.0 || big_d >= p.min(1.0 - p) {
        return Err(FblscError::DomainError(format!(
            "BMS achievability needs 0 ≤ D < min(p,1−p); got p={p}, D={big_d}"
        )));
    }
    let m = log_m.exp();
    let mut total = 0.0;
    for (weight, ball) in bms_ball_probs(p, big_d, n) {
        // (1 − ball)^M via M·ln(1−ball); ball = 1 ⇒ factor 0.
        let miss = if ball >= 1.0 {
            0.0
        } else {
            (m * (-ball).ln_1p()).exp()
        };
        total += weight * miss;
    }
    Ok(total.clamp(0.0, 1.0))
}

/// For BMS(p) under Hamming at level D: per ones-count k, the binomial weight
/// of {Xⁿ has k ones} and the exact product-measure probability of the
/// distortion ball ℬ_D(Xⁿ) under P*_X̂.
pub(crate) fn bms_ball_probs(p: f64, big_d: f64, n: usize) -> Vec<(f64, f64)> {
    let q = (p - big_d) / (1.0 - 2.0 * big_d); // P*_{X̂}(1)
    let s = (n as f64 * big_d).floor() as usize; // allowed mismatches
    let lnf: Vec<f64> = {
        let mut v = vec![0.0f64; n + 1];
        for k in 1..=n {
            v[k] = v[k - 1] + (k as f64).ln();
        }
        v
    };
    let lbin = |n: usize, k: usize| lnf[n] - lnf[k] - lnf[n - k];
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let (lr1, lr0) = (q.ln(), (1.0 - q).ln());
    (0..=n)
        .map(|k| {
            let lw = lbin(n, k) + k as f64 * lp + (n - k) as f64 * lq;
            // Flip a of the k ones and b of the n−k zeros, a + b ≤ s; the
            // reproduction sequence then has k − a + b ones.
            let mut ball = 0.0f64;
            for a in 0..=k.min(s) {
                for b in 0..=(s - a).min(n - k) {
                    let ones = k - a + b;
                    let lpr = lbin(k, a)
                        + lbin(n - k, b)
                        + ones as f64 * lr1
                        + (n - ones) as f64 * lr0;
                    ball += lpr.exp();
                }
            }
            (lw.exp(), ball.min(1.0))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{binary_entropy, DistortionMatrix};
    use crate::rd::{rate_distortion, tilted_density};

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn lossless_degenerate_uniform() {
        let p = Pmf::bernoulli(0.5).unwrap();
        let b = lossless_bounds(&p, 20, 20.0 * LN2 + 1e-9, 0.1).unwrap();
        assert_eq!(b.ach_upper, 0.0);
    }

    #[test]
    fn lossless_binomial_oracle() {
        // Bern(0.2), n=100: ach equals a binomial tail computed directly.
        let p = Pmf::bernoulli(0.2).unwrap();
        let n = 100;
        let h = binary_entropy(0.2);
        let log_m = n as f64 * h + 10.0;
        let b = lossless_bounds(&p, n, log_m, 0.05).unwrap();
        // ı = −ln0.8 + k(ln0.8/0.2 diff): threshold on # of ones k.
        let i0 = -(0.8f64).ln();
        let i1 = -(0.2f64).ln();
        let kmin = ((log_m - n as f64 * i0) / (i1 - i0)).ceil() as usize;
        let mut want = 0.0;
        let mut lnf = vec![0.0f64; n + 1];
        for k in 1..=n {
            lnf[k] = lnf[k - 1] + (k as f64).ln();
        }
        for k in kmin..=n {
            want += (lnf[n] - lnf[k] - lnf[n - k]
                + k as f64 * (0.2f64).ln()
                + (n - k) as f64 * (0.8f64).ln())
            .exp();
        }
        assert!((b.ach_upper - want).abs() < 1e-12);
        assert!(b.conv_lower <= b.ach_upper);
    }

    #[test]
    fn rd_converse_bms_and_degenerate() {
        let p = Pmf::bernoulli(0.2).unwrap();
        let d = DistortionMatrix::hamming(2).unwrap();
        let sol = rate_distortion(&p, &d, 0.1).unwrap();
        let t = tilted_density(&sol, &p, &d, 0.1).unwrap();
        let n = 60;
        let log_m = n as f64 * sol.rate;
        let gamma = (n as f64).ln() / n as f64;
        let c = rd_converse(&t, &p, n, log_m, gamma).unwrap();
        assert!((0.0..=1.0).contains(&c));
        // Degenerate: ȷ ≡ 0 clamps to 0.
        let sol0 = rate_distortion(&p, &d, 0.5).unwrap();
        let t0 = tilted_density(&sol0, &p, &d, 0.5).unwrap();
        assert_eq!(rd_converse(&t0, &p, n, 0.1, gamma).unwrap(), 0.0);
    }

    #[test]
    fn ach_bms_small_case_brute_force() {
        // n=1, D=0, M=1: excess iff the single codeword misses X.
        // Codebook ~ P*_X̂ = P_X when D=0: E[(1−P*(x))¹] summed.
        let p = 0.2;
        let got = rd_achievability_bms(p, 0.0, 1, 0.0).unwrap();
        let want = p * (1.0 - p) + (1.0 - p) * p;
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn ach_monotone_in_m() {
        let mut prev = 1.0;
        for lm in [5.0, 8.0, 11.0, 14.0] {
            let v = rd_achievability_bms(0.2, 0.1, 60, lm).unwrap();
            assert!(v <= prev + 1e-12);
            prev = v;
        }
        // Huge M drives the bound to 0.
        assert!(rd_achievability_bms(0.2, 0.1, 30, 60.0).unwrap() < 1e-9);
    }

    #[test]
    fn ach_second_order_operating_point() {
        // p=0.2, D=0.1, n=60, log M at the ε=0.1 second-order point: value
        // lands in a sane interval.
        let n = 60.0;
        let r = binary_entropy(0.2) - binary_entropy(0.1);
        let v = 0.2 * 0.8 * (4.0f64).ln().powi(2);
        let qi = crate::prob::q_inverse(0.1).unwrap();
        let log_m = n * r + (n * v).sqrt() * qi;
        let got = rd_achievability_bms(0.2, 0.1, 60, log_m).unwrap();
        assert!(got > 0.0 && got < 0.5, "{got}");
    }
}
