//! Noisy (remote) lossy source coding via the surrogate distortion measure.

use crate::error::{FblscError, Result};
use crate::prob::{CondPmf, DistortionMatrix, Pmf, SUPPORT_EPS};

use super::ba::{rate_distortion, RdSolution};
use super::tilted::{tilted_density, TiltedTable};

/// Solution of the noisy rate-distortion problem: the clean solve on the
/// observation P_Y under the surrogate distortion, plus the noisy tilted
/// density and the two dispersion terms.
#[derive(Debug, Clone)]
pub struct NoisyRdSolution {
    /// R(P_XY, D), nats.
    pub rate: f64,
    pub lambda_star: f64,
    /// Surrogate distortion d̄(y,x̂) = E[d(X,x̂) | Y = y].
    pub surrogate_distortion: DistortionMatrix,
    /// Noisy tilted density averaged over the optimal test channel,
    /// flattened row-major over (x, y).
    pub tilted_xy: TiltedTable,
    /// Ṽ = Var[ȷ(X,Y,X̂)] — the dispersion governing second-order asymptotics.
    pub dispersion_tilde: f64,
    /// Var[ȷ̄(Y)] — the dispersion of the surrogate problem.
    pub surrogate_dispersion: f64,
    /// The clean solve on P_Y under the surrogate distortion.
    pub surrogate_solution: RdSolution,
}

/// Noisy rate-distortion function R(P_XY, D) with X observed through the
/// channel P_{Y|X}; reduces to `rate_distortion` on P_Y with the surrogate
/// measure d̄.
pub fn noisy_rate_distortion(
    px: &Pmf,
    ch: &CondPmf,
    d: &DistortionMatrix,
    big_d: f64,
) -> Result<NoisyRdSolution> {
    if ch.n_inputs() != px.len() || d.n_source() != px.len() {
        return Err(FblscError::DomainError(
            "source, channel and distortion dimensions disagree".into(),
        ));
    }
    let joint = ch.joint_with(px)?;
    let py = joint.col_marginal();
    let cond_x_given_y = joint.cond_rows_given_col();
    let ny = py.len();
    let nxh = d.n_repro();

    // d̄(y, x̂) = Σ_x P_{X|Y}(x|y) d(x, x̂).
    let dbar_rows: Vec<Vec<f64>> = (0..ny)
        .map(|y| {
            (0..nxh)
                .map(|xh| {
                    (0..px.len())
                        .map(|x| cond_x_given_y[y][x] * d.get(x, xh))
                        .sum()
                })
                .collect()
        })
        .collect();
    let dbar = DistortionMatrix::new(
        py.labels().to_vec(),
        d.repro_labels().to_vec(),
        dbar_rows,
    )?;

    let sol = rate_distortion(&py, &dbar, big_d)?;
    let jbar = tilted_density(&sol, &py, &dbar, big_d)?;
    let lambda = sol.lambda_star;

    // e(x, y) = E_{P*_{X̂|Y=y}}[d(x, X̂)] — the only route by which x enters
    // the noisy tilted density.
    let nx = px.len();
    let mut e = vec![vec![0.0; ny]; nx];
    for y in 0..ny {
        for x in 0..nx {
            e[x][y] = (0..nxh)
                .map(|xh| sol.test_channel.prob(y, xh) * d.get(x, xh))
                .sum();
        }
    }
    // tilted_xy(x,y) = ȷ̄(y) + λ*(e(x,y) − E_{X|Y=y}[e(X,y)]); flattened (x,y).
    let mut values = Vec::with_capacity(nx * ny);
    let mut weights = Vec::with_capacity(nx * ny);
    for x in 0..nx {
        for y in 0..ny {
            let ebar: f64 = (0..nx)
                .map(|xp| cond_x_given_y[y][xp] * e[xp][y])
                .sum();
            values.push(jbar.values[y] + lambda * (e[x][y] - ebar));
            weights.push(joint.prob(x, y));
        }
    }
    let tilted_xy = TiltedTable::from_values(values, &weights);

    // Ṽ = Var[ȷ̄(Y)] + (λ*)² E[Var[d(X,X̂) | Y, X̂]].
    let mut cond_var = 0.0;
    for y in 0..ny {
        if py.prob(y) <= SUPPORT_EPS {
            continue;
        }
        for xh in 0..nxh {
            let w = py.prob(y) * sol.test_channel.prob(y, xh);
            if w <= SUPPORT_EPS {
                continue;
            }
            let mean: f64 = (0..nx)
                .map(|x| cond_x_given_y[y][x] * d.get(x, xh))
                .sum();
            let var: f64 = (0..nx)
                .map(|x| cond_x_given_y[y][x] * (d.get(x, xh) - mean).powi(2))
                .sum();
            cond_var += w * var;
        }
    }
    let surrogate_dispersion = jbar.variance;
    let dispersion_tilde = surrogate_dispersion + lambda * lambda * cond_var;

    Ok(NoisyRdSolution {
        rate: sol.rate,
        lambda_star: lambda,
        surrogate_distortion: dbar,
        tilted_xy,
        dispersion_tilde,
        surrogate_dispersion,
        surrogate_solution: sol,
    })
}
