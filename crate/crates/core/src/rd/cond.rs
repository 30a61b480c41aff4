//! Conditional and joint rate-distortion functions.

use crate::error::{FblscError, Result};
use crate::prob::{DistortionMatrix, JointPmf, Pmf, SUPPORT_EPS};

use super::ba::{ba_fixed_slope, d_range};
use super::tilted::TiltedTable;

/// Conditional rate-distortion solution: per-condition solves sharing one
/// Lagrange slope.
#[derive(Debug, Clone)]
pub struct CondRdSolution {
    /// R(P_{X|Y}, D | P_Y) = min I(X;X̂|Y) s.t. E[d] ≤ D, nats.
    pub rate: f64,
    /// Common slope λ* across the per-y subproblems.
    pub lambda_star: f64,
    /// Per-condition (rate, distortion, test-channel rows, repro marginal).
    pub per_condition: Vec<CondSlice>,
    /// Aggregate achieved distortion.
    pub distortion_achieved: f64,
    /// P_Y weights of the slices.
    pub cond_weights: Vec<f64>,
}

/// One conditional slice of a [`CondRdSolution`].
#[derive(Debug, Clone)]
pub struct CondSlice {
    pub rate: f64,
    pub distortion: f64,
    pub test_channel_rows: Vec<Vec<f64>>,
    pub repro_marginal: Vec<f64>,
}

/// min I(X;X̂|Y) over E[d(X,X̂)] ≤ D with a common multiplier across the
/// per-y subproblems. Conditioning variable is the column of `j`.
pub fn conditional_rate_distortion(
    j: &JointPmf,
    d: &DistortionMatrix,
    big_d: f64,
) -> Result<CondRdSolution> {
    let py = j.col_marginal();
    let cond = j.cond_rows_given_col();
    let active: Vec<usize> = (0..j.ncols())
        .filter(|&y| py.prob(y) > SUPPORT_EPS)
        .collect();

    // Aggregate feasibility range.
    let mut d_min_agg = 0.0;
    let mut d_max_agg = 0.0;
    for &y in &active {
        let slice = Pmf::from_probs(&cond[y])?;
        let (lo, hi) = d_range(&slice, d);
        d_min_agg += py.prob(y) * lo;
        d_max_agg += py.prob(y) * hi;
    }
    if big_d <= d_min_agg {
        return Err(FblscError::InfeasibleDistortion {
            d: big_d,
            d_min: d_min_agg,
        });
    }

    let solve_at = |lambda: f64| -> Result<(f64, f64, Vec<CondSlice>)> {
        let mut rate = 0.0;
        let mut dist = 0.0;
        let mut slices = Vec::with_capacity(j.ncols());
        for y in 0..j.ncols() {
            if py.prob(y) <= SUPPORT_EPS {
                slices.push(CondSlice {
                    rate: 0.0,
                    distortion: 0.0,
                    test_channel_rows: vec![vec![1.0 / d.n_repro() as f64; d.n_repro()]; j.nrows()],
                    repro_marginal: vec![1.0 / d.n_repro() as f64; d.n_repro()],
                });
                continue;
            }
            let (r, dd, q, rm) = ba_fixed_slope(&cond[y], d.rows(), lambda, None)?;
            rate += py.prob(y) * r;
            dist += py.prob(y) * dd;
            slices.push(CondSlice {
                rate: r,
                distortion: dd,
                test_channel_rows: q,
                repro_marginal: rm,
            });
        }
        Ok((rate, dist, slices))
    };

    if big_d >= d_max_agg {
        // Zero-rate regime: the best constant reproduction per condition. At
        // λ = 0 the fixed-point map no longer selects among its (all rate-0)
        // solutions, so build the distortion-minimizing one explicitly.
        let mut dist = 0.0;
        let mut slices = Vec::with_capacity(j.ncols());
        for y in 0..j.ncols() {
            let best = (0..d.n_repro())
                .min_by(|&a, &b| {
                    let ea: f64 = (0..j.nrows()).map(|x| cond[y][x] * d.get(x, a)).sum();
                    let eb: f64 = (0..j.nrows()).map(|x| cond[y][x] * d.get(x, b)).sum();
                    ea.partial_cmp(&eb).unwrap()
                })
                .expect("nonempty reproduction alphabet");
            let dd: f64 = (0..j.nrows()).map(|x| cond[y][x] * d.get(x, best)).sum();
            let mut rm = vec![0.0; d.n_repro()];
            rm[best] = 1.0;
            dist += py.prob(y) * dd;
            slices.push(CondSlice {
                rate: 0.0,
                distortion: dd,
                test_channel_rows: vec![rm.clone(); j.nrows()],
                repro_marginal: rm,
            });
        }
        return Ok(CondRdSolution {
            rate: 0.0,
            lambda_star: 0.0,
            per_condition: slices,
            distortion_achieved: dist,
            cond_weights: py.probs().to_vec(),
        });
    }

    let mut lo = 0.0;
    let mut hi = 1.0;
    loop {
        let (_, dist, _) = solve_at(hi)?;
        if dist < big_d {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > 1e18 {
            return Err(FblscError::ConvergenceFailure {
                iterations: 0,
                residual: dist - big_d,
            });
        }
    }
    let (mut rate, mut dist, mut slices) = solve_at(hi)?;
    let mut lambda = hi;
    for _ in 0..200 {
        if hi - lo < 1e-13 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let (rt, dt, st) = solve_at(mid)?;
        let close = (dt - big_d).abs() < 1e-13;
        if dt > big_d && !close {
            lo = mid;
        } else {
            hi = mid;
            rate = rt;
            dist = dt;
            slices = st;
            lambda = mid;
            if close {
                break;
            }
        }
    }
    Ok(CondRdSolution {
        rate,
        lambda_star: lambda,
        per_condition: slices,
        distortion_achieved: dist,
        cond_weights: py.probs().to_vec(),
    })
}

/// Joint rate-distortion solution for a pair source under two distortion
/// constraints.
#[derive(Debug, Clone)]
pub struct JointRdSolution {
    /// R(P_XY, D1, D2) = min I(X,Y;X̂,Ŷ), nats.
    pub rate: f64,
    pub nu1_star: f64,
    pub nu2_star: f64,
    /// Distortions-tilted density ı_XY(x,y|D1,D2) flattened row-major over (x,y).
    pub tilted_ixy: TiltedTable,
    /// Optimal reproduction marginal over (x̂,ŷ) pairs, row-major.
    pub repro_marginal: Vec<f64>,
    /// Optimal test channel rows, source (x,y) → repro (x̂,ŷ), row-major.
    pub test_channel: Vec<Vec<f64>>,
    pub d1_achieved: f64,
    pub d2_achieved: f64,
}

/// min I(X,Y;X̂,Ŷ) s.t. E[d1(X,X̂)] ≤ D1 and E[d2(Y,Ŷ)] ≤ D2, by a
/// product-alphabet reduction with 2-D bisection on the multipliers (ν1, ν2).
pub fn joint_rate_distortion(
    j: &JointPmf,
    d1: &DistortionMatrix,
    d2: &DistortionMatrix,
    big_d1: f64,
    big_d2: f64,
) -> Result<JointRdSolution> {
    let nx = j.nrows();
    let ny = j.ncols();
    let n1 = d1.n_repro();
    let n2 = d2.n_repro();
    let probs: Vec<f64> = (0..nx)
        .flat_map(|x| (0..ny).map(move |y| (x, y)))
        .map(|(x, y)| j.prob(x, y))
        .collect();
    // Product distortions on the flattened alphabets.
    let d1p: Vec<Vec<f64>> = (0..nx * ny)
        .map(|s| {
            let x = s / ny;
            (0..n1 * n2).map(|t| d1.get(x, t / n2)).collect()
        })
        .collect();
    let d2p: Vec<Vec<f64>> = (0..nx * ny)
        .map(|s| {
            let y = s % ny;
            (0..n1 * n2).map(|t| d2.get(y, t % n2)).collect()
        })
        .collect();

    // Feasibility per coordinate.
    let feas = |dp: &[Vec<f64>], target: f64| -> Result<()> {
        let dmin: f64 = probs
            .iter()
            .zip(dp)
            .map(|(&w, row)| w * row.iter().copied().fold(f64::INFINITY, f64::min))
            .sum();
        if target <= dmin {
            Err(FblscError::InfeasibleDistortion {
                d: target,
                d_min: dmin,
            })
        } else {
            Ok(())
        }
    };
    feas(&d1p, big_d1)?;
    feas(&d2p, big_d2)?;

    let eval = |nu1: f64, nu2: f64| -> Result<(f64, f64, f64, Vec<Vec<f64>>, Vec<f64>)> {
        // Combined exponent ν1·d1 + ν2·d2 with unit slope.
        let comb: Vec<Vec<f64>> = d1p
            .iter()
            .zip(&d2p)
            .map(|(r1, r2)| r1.iter().zip(r2).map(|(&a, &b)| nu1 * a + nu2 * b).collect())
            .collect();
        let (rate, _, q, r) = ba_fixed_slope(&probs, &comb, 1.0, None)?;
        let mut e1 = 0.0;
        let mut e2 = 0.0;
        for s in 0..probs.len() {
            for t in 0..r.len() {
                let w = probs[s] * q[s][t];
                e1 += w * d1p[s][t];
                e2 += w * d2p[s][t];
            }
        }
        Ok((rate, e1, e2, q, r))
    };

    // Inner bisection on ν2 at fixed ν1 to meet E[d2] = D2 (ν2 = 0 if slack).
    let solve_nu2 = |nu1: f64| -> Result<(f64, (f64, f64, f64, Vec<Vec<f64>>, Vec<f64>))> {
        let at0 = eval(nu1, 0.0)?;
        if at0.2 <= big_d2 + 1e-12 {
            return Ok((0.0, at0));
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        loop {
            let r = eval(nu1, hi)?;
            if r.2 < big_d2 {
                break;
            }
            lo = hi;
            hi *= 2.0;
            if hi > 1e15 {
                return Err(FblscError::ConvergenceFailure {
                    iterations: 0,
                    residual: r.2 - big_d2,
                });
            }
        }
        let mut best = eval(nu1, hi)?;
        let mut nu2 = hi;
        for _ in 0..120 {
            if hi - lo < 1e-12 * hi.max(1.0) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let r = eval(nu1, mid)?;
            if r.2 > big_d2 {
                lo = mid;
            } else {
                hi = mid;
                best = r;
                nu2 = mid;
            }
        }
        Ok((nu2, best))
    };

    // Outer bisection on ν1 to meet E[d1] = D1.
    let (nu2_at0, r_at0) = solve_nu2(0.0)?;
    let (nu1_star, nu2_star, rate, e1, e2, q, rmarg) = if r_at0.1 <= big_d1 + 1e-12 {
        (0.0, nu2_at0, r_at0.0, r_at0.1, r_at0.2, r_at0.3, r_at0.4)
    } else {
        let mut lo = 0.0;
        let mut hi = 1.0;
        loop {
            let (_, r) = solve_nu2(hi)?;
            if r.1 < big_d1 {
                break;
            }
            lo = hi;
            hi *= 2.0;
            if hi > 1e15 {
                return Err(FblscError::ConvergenceFailure {
                    iterations: 0,
                    residual: r.1 - big_d1,
                });
            }
        }
        let (mut nu2b, mut best) = solve_nu2(hi)?;
        let mut nu1 = hi;
        for _ in 0..120 {
            if hi - lo < 1e-12 * hi.max(1.0) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let (n2m, r) = solve_nu2(mid)?;
            if r.1 > big_d1 {
                lo = mid;
            } else {
                hi = mid;
                nu2b = n2m;
                best = r;
                nu1 = mid;
            }
        }
        (nu1, nu2b, best.0, best.1, best.2, best.3, best.4)
    };

    // ı_XY(x,y) = −log E_{P*}[exp(ν1(D1 − d1) + ν2(D2 − d2))].
    let support: Vec<usize> = (0..rmarg.len()).filter(|&t| rmarg[t] > 1e-12).collect();
    let values: Vec<f64> = (0..probs.len())
        .map(|s| {
            let sum: f64 = support
                .iter()
                .map(|&t| {
                    rmarg[t]
                        * (nu1_star * (big_d1 - d1p[s][t]) + nu2_star * (big_d2 - d2p[s][t])).exp()
                })
                .sum();
            -sum.ln()
        })
        .collect();
    let tilted_ixy = TiltedTable::from_values(values, &probs);

    Ok(JointRdSolution {
        rate,
        nu1_star,
        nu2_star,
        tilted_ixy,
        repro_marginal: rmarg,
        test_channel: q,
        d1_achieved: e1,
        d2_achieved: e2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::binary_entropy;
    use crate::rd::rate_distortion;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn cond_independent_equals_marginal() {
        // X ⊥ Y: conditioning is vacuous.
        let j = JointPmf::from_matrix(&[
            vec![0.2 * 0.6, 0.2 * 0.4],
            vec![0.8 * 0.6, 0.8 * 0.4],
        ])
        .unwrap();
        let d = DistortionMatrix::hamming(2).unwrap();
        let c = conditional_rate_distortion(&j, &d, 0.1).unwrap();
        let m = rate_distortion(&Pmf::bernoulli(0.8).unwrap(), &d, 0.1).unwrap();
        assert!((c.rate - m.rate).abs() < 1e-8);
        assert!((c.lambda_star - m.lambda_star).abs() < 1e-5);
    }

    #[test]
    fn cond_dsbs_closed_form() {
        // DSBS(p), D < p: R = H_b(p) − H_b(D).
        let j = JointPmf::dsbs(0.25).unwrap();
        let d = DistortionMatrix::hamming(2).unwrap();
        let c = conditional_rate_distortion(&j, &d, 0.1).unwrap();
        let want = binary_entropy(0.25) - binary_entropy(0.1);
        assert!((c.rate - want).abs() < 1e-7, "{} vs {want}", c.rate);
    }

    #[test]
    fn cond_y_equals_x() {
        let j = JointPmf::from_matrix(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let d = DistortionMatrix::hamming(2).unwrap();
        let c = conditional_rate_distortion(&j, &d, 0.01).unwrap();
        assert!(c.rate.abs() < 1e-9);
    }

    #[test]
    fn joint_dsbs_closed_form() {
        // DSBS(p), D ≤ p1: R(P_XY, D, D) = log 2 + H_b(p) − 2 H_b(D).
        let p = 0.1;
        let big_d = 0.05;
        let j = JointPmf::dsbs(p).unwrap();
        let d = DistortionMatrix::hamming(2).unwrap();
        let sol = joint_rate_distortion(&j, &d, &d, big_d, big_d).unwrap();
        let want = LN2 + binary_entropy(p) - 2.0 * binary_entropy(big_d);
        assert!((sol.rate - want).abs() < 1e-6, "{} vs {want}", sol.rate);
        assert!((sol.tilted_ixy.mean - sol.rate).abs() < 1e-7);
        assert!((sol.d1_achieved - big_d).abs() < 1e-8);
        assert!((sol.d2_achieved - big_d).abs() < 1e-8);
    }

    #[test]
    fn joint_degenerate() {
        let j = JointPmf::dsbs(0.1).unwrap();
        let d = DistortionMatrix::hamming(2).unwrap();
        let sol = joint_rate_distortion(&j, &d, &d, 0.6, 0.6).unwrap();
        assert!(sol.rate.abs() < 1e-9);
        assert_eq!(sol.nu1_star, 0.0);
        assert_eq!(sol.nu2_star, 0.0);
    }
}
