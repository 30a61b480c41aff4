//! Non-asymptotic converse bounds for the multiterminal problems: the
//! two-decoder (Kaspi) joint excess-distortion converse, the successive
//! refinement union-tail converse, and the function-reproduction three-event
//! converse. All tails are exact via type enumeration.

use crate::error::{FblscError, Result};
use crate::mt::FySolution;
use crate::prob::{JointPmf, Pmf, SUPPORT_EPS};
use crate::rd::TiltedTable;

use super::tail::{exact_sum_tail, union_tail_prob};

fn require_positive_gamma(gamma: f64) -> Result<()> {
    if gamma <= 0.0 {
        return Err(FblscError::DomainError(
            "converse slack gamma must be positive".into(),
        ));
    }
    Ok(())
}

/// Two-decoder converse on the joint excess-distortion probability:
/// Pr{Σ ȷ_K(Xᵢ,Yᵢ) ≥ log M + nγ} − exp(−nγ), clamped to [0,1].
///
/// `tilted_xy` holds ȷ_K over flattened (x, y) pairs (row-major in x).
pub fn kaspi_converse(
    tilted_xy: &TiltedTable,
    j: &JointPmf,
    n: usize,
    log_m: f64,
    gamma: f64,
) -> Result<f64> {
    require_positive_gamma(gamma)?;
    let mut probs = Vec::with_capacity(j.nrows() * j.ncols());
    for x in 0..j.nrows() {
        for y in 0..j.ncols() {
            probs.push(j.prob(x, y));
        }
    }
    if probs.len() != tilted_xy.values.len() {
        return Err(FblscError::DomainError(
            "tilted table length does not match the joint alphabet".into(),
        ));
    }
    let raw = exact_sum_tail(&tilted_xy.values, &probs, n, log_m + n as f64 * gamma)?
        - (-(n as f64) * gamma).exp();
    Ok(raw.clamp(0.0, 1.0))
}

/// Successive-refinement converse on the joint excess-distortion probability:
///
/// Pr{ Σ ȷ(Xᵢ,D₁) ≥ log M₁ + nγ  or
///     Σ ȷ_𝖱(Xᵢ) ≥ log M₁M₂ + ξ* log M₁ + (1+ξ*)nγ } − slack,
///
/// where the slack is 2exp(−nγ) when ξ* = 0 (the base-rate constraint is
/// slack, e.g. successively refinable sources) and 4exp(−nγ) otherwise.
pub fn sr_converse(
    tilted_d1: &TiltedTable,
    tilted_sr: &TiltedTable,
    xi_star: f64,
    p: &Pmf,
    n: usize,
    log_m1: f64,
    log_m12: f64,
    gamma: f64,
) -> Result<f64> {
    require_positive_gamma(gamma)?;
    if tilted_d1.values.len() != p.len() || tilted_sr.values.len() != p.len() {
        return Err(FblscError::DomainError(
            "tilted table length does not match the source alphabet".into(),
        ));
    }
    let ng = n as f64 * gamma;
    let coords: Vec<Vec<f64>> = (0..p.len())
        .map(|x| vec![tilted_d1.values[x], tilted_sr.values[x]])
        .collect();
    let thresholds = [
        log_m1 + ng,
        log_m12 + xi_star * log_m1 + (1.0 + xi_star) * ng,
    ];
    let union = union_tail_prob(&coords, p.probs(), n, &thresholds)?;
    let slack = if xi_star == 0.0 { 2.0 } else { 4.0 };
    Ok((union - slack * (-ng).exp()).clamp(0.0, 1.0))
}

/// Function-reproduction two-decoder converse:
///
/// Pr{ Σ ȷ(Xᵢ,D₁) ≥ log M₁ + nγ  or
///     Σ −log P_Y(g(Xᵢ)) ≥ log M₂ + nγ  or
///     Σ ȷ(Xᵢ) ≥ log M₁M₂ + ξ* log M₁ + (1+ξ*)nγ } − 4exp(−nγ),
///
/// with ȷ the solver's total-excess tilted density. Exact union tail over the
/// per-symbol value triple.
pub fn fy_converse(
    fy: &FySolution,
    p: &Pmf,
    g: &[usize],
    n: usize,
    log_m1: f64,
    log_m2: f64,
    gamma: f64,
) -> Result<f64> {
    require_positive_gamma(gamma)?;
    if g.len() != p.len() || fy.tilted.values.len() != p.len() {
        return Err(FblscError::DomainError(
            "function table length does not match the source alphabet".into(),
        ));
    }
    let ny = g.iter().copied().max().unwrap_or(0) + 1;
    let mut py = vec![0.0f64; ny];
    for (x, &y) in g.iter().enumerate() {
        py[y] += p.prob(x);
    }
    let ng = n as f64 * gamma;
    let coords: Vec<Vec<f64>> = (0..p.len())
        .map(|x| {
            let h = if py[g[x]] > SUPPORT_EPS {
                -py[g[x]].ln()
            } else {
                0.0
            };
            vec![fy.tilted_d1.values[x], h, fy.tilted.values[x]]
        })
        .collect();
    let thresholds = [
        log_m1 + ng,
        log_m2 + ng,
        log_m1 + log_m2 + fy.xi_star * log_m1 + (1.0 + fy.xi_star) * ng,
    ];
    let union = union_tail_prob(&coords, p.probs(), n, &thresholds)?;
    Ok((union - 4.0 * (-ng).exp()).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::super::fixed::rd_converse;
    use super::*;
    use crate::mt::fy_solution;
    use crate::prob::DistortionMatrix;
    use crate::rd::{rate_distortion, tilted_density};

    #[test]
    fn sr_with_equal_tables_matches_rd_with_doubled_slack() {
        // With identical tilted tables, ξ* = 0 and log M₁₂ = log M₁, the
        // union event collapses to a single tail; the bound equals the
        // plain converse with the slack term doubled.
        let p = Pmf::bernoulli(0.2).unwrap();
        let d = DistortionMatrix::hamming(2).unwrap();
        let rd = rate_distortion(&p, &d, 0.05).unwrap();
        let t = tilted_density(&rd, &p, &d, 0.05).unwrap();
        let (n, gamma) = (24, (24f64).ln() / 24.0);
        let log_m = 24.0 * rd.rate;
        let got = sr_converse(&t, &t, 0.0, &p, n, log_m, log_m, gamma).unwrap();
        let tail = exact_sum_tail(&t.values, p.probs(), n, log_m + n as f64 * gamma).unwrap();
        let want = (tail - 2.0 * (-(n as f64) * gamma).exp()).clamp(0.0, 1.0);
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        // Consistency against the single-description converse.
        let single = rd_converse(&t, &p, n, log_m, gamma).unwrap();
        assert!(got <= single + 1e-12);
    }

    #[test]
    fn kaspi_two_valued_collapse() {
        // A tilted table constant on the rows of a DSBS reduces to a
        // two-letter tail over the agree/disagree marginal.
        let j = JointPmf::dsbs(0.15).unwrap();
        let (a, b) = (0.9, 0.2);
        // Agree pairs (0,0), (1,1) carry value a; disagree pairs carry b.
        let values = vec![a, b, b, a];
        let probs = vec![0.425, 0.075, 0.075, 0.425];
        let t = TiltedTable::from_values(values, &probs);
        let n = 30;
        let gamma = (n as f64).ln() / n as f64;
        let log_m = n as f64 * t.mean;
        let got = kaspi_converse(&t, &j, n, log_m, gamma).unwrap();
        let reduced =
            exact_sum_tail(&[a, b], &[0.85, 0.15], n, log_m + n as f64 * gamma).unwrap();
        let want = (reduced - (-(n as f64) * gamma).exp()).clamp(0.0, 1.0);
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        assert!((0.0..=1.0).contains(&got));
        // Nonincreasing in M.
        let looser = kaspi_converse(&t, &j, n, log_m + 2.0, gamma).unwrap();
        assert!(looser <= got + 1e-12);
    }

    #[test]
    fn fy_constant_y_reduces_to_sr() {
        // |𝒴| = 1 makes the middle event vacuous for log M₂ > 0, so the
        // three-event bound equals the successive-refinement bound with
        // log M₁₂ = log M₁ + log M₂.
        let p = Pmf::new(
            vec!["0".into(), "1".into(), "2".into()],
            vec![0.5, 0.3, 0.2],
        )
        .unwrap();
        let d = DistortionMatrix::hamming(3).unwrap();
        let g = vec![0usize, 0, 0];
        let rd1 = rate_distortion(&p, &d, 0.35).unwrap();
        let sol = fy_solution(&p, &g, &d, &d, 0.35, 0.1, rd1.rate + 0.01).unwrap();
        assert!(sol.xi_star > 1e-6, "rate constraint should bind");
        let (n, gamma) = (16, 0.08);
        let (lm1, lm2) = (n as f64 * 0.45, n as f64 * 0.35);
        let got = fy_converse(&sol, &p, &g, n, lm1, lm2, gamma).unwrap();
        let want = sr_converse(
            &sol.tilted_d1,
            &sol.tilted,
            sol.xi_star,
            &p,
            n,
            lm1,
            lm1 + lm2,
            gamma,
        )
        .unwrap();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn fy_all_thresholds_unreachable_gives_slack_complement() {
        let p = Pmf::new(
            vec!["0".into(), "1".into(), "2".into()],
            vec![0.5, 0.3, 0.2],
        )
        .unwrap();
        let d = DistortionMatrix::hamming(3).unwrap();
        let g = vec![0usize, 1, 1];
        let sol = fy_solution(&p, &g, &d, &d, 0.4, 0.1, 2.0).unwrap();
        let (n, gamma) = (10, 0.5);
        let got = fy_converse(&sol, &p, &g, n, -1e6, -1e6, gamma).unwrap();
        let want = (1.0 - 4.0 * (-(n as f64) * gamma).exp()).clamp(0.0, 1.0);
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn rejects_nonpositive_gamma() {
        let p = Pmf::bernoulli(0.3).unwrap();
        let d = DistortionMatrix::hamming(2).unwrap();
        let rd = rate_distortion(&p, &d, 0.1).unwrap();
        let t = tilted_density(&rd, &p, &d, 0.1).unwrap();
        assert!(sr_converse(&t, &t, 0.0, &p, 10, 1.0, 1.0, 0.0).is_err());
        let j = JointPmf::dsbs(0.1).unwrap();
        let t4 = TiltedTable::from_values(vec![0.1; 4], &[0.25; 4]);
        assert!(kaspi_converse(&t4, &j, 10, 1.0, -0.1).is_err());
    }
}
