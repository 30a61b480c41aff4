//! Two-decoder solver for a source X with a deterministic function Y = g(X)
//! that the second decoder must reproduce losslessly alongside its lossy
//! reconstruction.
//!
//! 𝖱(R₁, D₁, D₂ | P_X) = min I(X̂₁;Y) + I(X;X̂₁,X̂₂|Y) subject to
//! E[d₁(X,X̂₁)] ≤ D₁, E[d₂(X,X̂₂)] ≤ D₂ and I(X;X̂₁) ≤ R₁. Since Y is a
//! function of X the objective equals I(X;X̂₁) + I(X;X̂₂|Y,X̂₁), which a
//! two-layer alternating minimization handles; the rate constraint enters
//! through a third multiplier ξ weighting the first layer, so the first-layer
//! exponent is divided by 1 + ξ. The minimal total rate of the two-encoder
//! system is this quantity plus H(P_Y).

use crate::error::{FblscError, Result};
use crate::prob::{Covariance2, DistortionMatrix, Pmf, SUPPORT_EPS};
use crate::rd::{rate_distortion, tilted_density, TiltedTable};

const RATE_TOL: f64 = 1e-11;
const GAP_TOL: f64 = 1e-9;
const MAX_INNER: usize = 100_000;

/// Output of the function-reproduction two-decoder solver.
#[derive(Debug, Clone)]
pub struct FySolution {
    /// 𝖱(R₁, D₁, D₂ | P_X) in nats (total rate minus H(P_Y)).
    pub sum_rate_excess: f64,
    /// ξ* = −∂𝖱/∂R₁ ≥ 0 (0 when the rate constraint is slack).
    pub xi_star: f64,
    /// λ₁* = −∂𝖱/∂D₁ ≥ 0.
    pub lambda1_star: f64,
    /// λ₂* = −∂𝖱/∂D₂ ≥ 0.
    pub lambda2_star: f64,
    /// β(x, g(x)), indexed by x.
    pub beta: Vec<f64>,
    /// β₂(x, g(x), x̂₁), indexed `[x][x̂₁]`.
    pub beta2: Vec<Vec<f64>>,
    /// ȷ(x) = (1+ξ*)log β(x,g(x)) − ξ*R₁ − λ₁*D₁ − λ₂*D₂, weighted by P_X;
    /// E[ȷ] = 𝖱.
    pub tilted: TiltedTable,
    /// ȷ(x, D₁ | P_X): the single-stage tilted density at D₁.
    pub tilted_d1: TiltedTable,
    /// H(P_Y) in nats.
    pub entropy_y: f64,
    /// Var[−log P_Y(g(X))].
    pub var_y: f64,
    /// Covariance of (ȷ(X, D₁ | P_X), ȷ(X) − log P_Y(g(X))): the first-stage
    /// tilted density against the total-rate density.
    pub cov1: Covariance2,
    /// Covariance of (ȷ(X) − log P_Y(g(X)), −log P_Y(g(X))).
    pub cov2: Covariance2,
    /// E[d₁], E[d₂] and I(X;X̂₁) under the converged test channels.
    pub d1_achieved: f64,
    pub d2_achieved: f64,
    pub i1_achieved: f64,
}

impl FySolution {
    /// w₁(x̂₁) = E[exp{log β(X,Y) − (λ₁*d₁(X,x̂₁) + log β₂(X,Y,x̂₁))/(1+ξ*)}];
    /// ≤ 1 with equality on the support of P*_{X̂₁}.
    pub fn w1(&self, p: &Pmf, d1: &DistortionMatrix, xhat1: usize) -> f64 {
        (0..p.len())
            .map(|x| {
                p.prob(x)
                    * (self.beta[x].ln()
                        - (self.lambda1_star * d1.get(x, xhat1)
                            + self.beta2[x][xhat1].ln())
                            / (1.0 + self.xi_star))
                        .exp()
            })
            .sum()
    }

    /// w₂(x̂₁, Q) with X̂₂ ~ q[g(x)] given x̂₁:
    /// E[exp{log β + (ξ* log β₂ − λ₁*d₁)/(1+ξ*) − λ₂*d₂(X,X̂₂)}] ≤ w₁(x̂₁).
    pub fn w2(
        &self,
        p: &Pmf,
        g: &[usize],
        d1: &DistortionMatrix,
        d2: &DistortionMatrix,
        xhat1: usize,
        q: &[Vec<f64>],
    ) -> f64 {
        (0..p.len())
            .map(|x| {
                let inner: f64 = (0..d2.n_repro())
                    .map(|b| q[g[x]][b] * (-self.lambda2_star * d2.get(x, b)).exp())
                    .sum();
                p.prob(x)
                    * (self.beta[x].ln()
                        + (self.xi_star * self.beta2[x][xhat1].ln()
                            - self.lambda1_star * d1.get(x, xhat1))
                            / (1.0 + self.xi_star))
                        .exp()
                    * inner
            })
            .sum()
    }
}

#[derive(Clone)]
struct State {
    /// P_{X̂₁}.
    p1: Vec<f64>,
    /// P_{X̂₂|Y,X̂₁}, indexed `[y][x̂₁][x̂₂]`.
    p2: Vec<Vec<Vec<f64>>>,
}

struct FpOut {
    i1: f64,
    e1: f64,
    e2: f64,
    /// log β(x, g(x)).
    lb: Vec<f64>,
    /// log β₂(x, g(x), x̂₁).
    lb2: Vec<Vec<f64>>,
}

/// Alternating minimization of
/// (1+ξ)I(X;X̂₁) + I(X;X̂₂|Y,X̂₁) + λ₁E[d₁] + λ₂E[d₂] at fixed multipliers.
fn fixed_point(
    p: &[f64],
    g: &[usize],
    d1: &[Vec<f64>],
    d2: &[Vec<f64>],
    xi: f64,
    l1: f64,
    l2: f64,
    state: &mut State,
) -> Result<FpOut> {
    let nx = p.len();
    let m1 = state.p1.len();
    let m2 = state.p2[0][0].len();
    let ny = state.p2.len();
    let d2_min: Vec<f64> = d2
        .iter()
        .map(|r| r.iter().copied().fold(f64::INFINITY, f64::min))
        .collect();

    // Re-open any support the new multipliers might call for.
    crate::rd::floor_simplex(&mut state.p1);
    for y in 0..ny {
        for a in 0..m1 {
            crate::rd::floor_simplex(&mut state.p2[y][a]);
        }
    }

    let mut lb2 = vec![vec![0.0; m1]; nx];
    let mut lb = vec![0.0; nx];
    let mut prev_obj = f64::INFINITY;
    // Consecutive certificate-promotion counts for suppressed atoms.
    let mut grow1 = vec![0usize; m1];
    let mut grow2 = vec![vec![vec![0usize; m2]; m1]; ny];
    // Spaced snapshots for safeguarded Aitken Δ² acceleration of slow
    // geometric modes; `pending` holds the pre-extrapolation state so a bad
    // jump can be reverted on the next certificate evaluation.
    const SNAP: usize = 500;
    let mut snap: Vec<State> = Vec::new();
    let mut pending: Option<(State, f64, usize)> = None;
    let mut cooldown = 0usize;
    for iter in 0..MAX_INNER {
        for x in 0..nx {
            let y = g[x];
            let mut e_max = f64::NEG_INFINITY;
            let mut ea = vec![0.0; m1];
            for a in 0..m1 {
                let mut s = 0.0;
                for b in 0..m2 {
                    s += state.p2[y][a][b] * (-l2 * (d2[x][b] - d2_min[x])).exp();
                }
                lb2[x][a] = l2 * d2_min[x] - s.ln();
                ea[a] = -(l1 * d1[x][a] + lb2[x][a]) / (1.0 + xi);
                e_max = e_max.max(ea[a]);
            }
            let mut s = 0.0;
            for a in 0..m1 {
                s += state.p1[a] * (ea[a] - e_max).exp();
            }
            lb[x] = -(e_max + s.ln());
        }

        let mut n1 = vec![0.0; m1];
        let mut n2 = vec![vec![vec![0.0; m2]; m1]; ny];
        let mut mass = vec![vec![0.0; m1]; ny];
        let (mut i1, mut i2, mut e1, mut e2) = (0.0, 0.0, 0.0, 0.0);
        for x in 0..nx {
            let y = g[x];
            let px = p[x];
            if px <= SUPPORT_EPS {
                continue;
            }
            for a in 0..m1 {
                let ea = -(l1 * d1[x][a] + lb2[x][a]) / (1.0 + xi);
                let q1 = state.p1[a] * (lb[x] + ea).exp();
                if q1 <= 0.0 {
                    continue;
                }
                let w = px * q1;
                n1[a] += w;
                mass[y][a] += w;
                i1 += w * (lb[x] + ea);
                e1 += w * d1[x][a];
                for b in 0..m2 {
                    let q2 = state.p2[y][a][b] * (lb2[x][a] - l2 * d2[x][b]).exp();
                    n2[y][a][b] += w * q2;
                    i2 += w * q2 * (lb2[x][a] - l2 * d2[x][b]);
                    e2 += w * q2 * d2[x][b];
                }
            }
        }
        let obj = (i1 + i2).max(0.0);

        let mut gap = 0.0f64;
        for a in 0..m1 {
            if state.p1[a] > 1e-250 {
                let lr = (n1[a] / state.p1[a]).ln();
                gap = gap.max(lr);
                grow1[a] = if lr > 1e-9 && state.p1[a] < 1e-4 {
                    grow1[a] + 1
                } else {
                    0
                };
            }
        }
        for y in 0..ny {
            for a in 0..m1 {
                if mass[y][a] <= 1e-15 {
                    continue;
                }
                for b in 0..m2 {
                    if state.p2[y][a][b] > 1e-250 {
                        let lr = (n2[y][a][b] / (mass[y][a] * state.p2[y][a][b])).ln();
                        gap = gap.max(lr);
                        grow2[y][a][b] = if lr > 1e-9 && state.p2[y][a][b] < 1e-4 {
                            grow2[y][a][b] + 1
                        } else {
                            0
                        };
                    }
                }
            }
        }

        let s1: f64 = n1.iter().sum();
        for a in 0..m1 {
            state.p1[a] = n1[a] / s1;
        }
        for y in 0..ny {
            for a in 0..m1 {
                if mass[y][a] > 1e-15 {
                    for b in 0..m2 {
                        state.p2[y][a][b] = n2[y][a][b] / mass[y][a];
                    }
                }
            }
        }

        // Fast-forward suppressed atoms the certificate keeps promoting:
        // near a repelling degenerate vertex their log-mass only grows at
        // ≈ gap per iteration, so organic escape would need ~1/gap
        // iterations. The bump escalates multiplicatively each time the
        // promotion persists. A wrong bump is harmless — the certificate
        // cannot close while excess mass hurts the value.
        let mut bumped = false;
        let mut bump = false;
        for a in 0..m1 {
            if grow1[a] >= 100 && state.p1[a] < 1e-3 {
                state.p1[a] = 1e-3;
                grow1[a] = 0;
                bump = true;
            }
        }
        if bump {
            bumped = true;
            let s: f64 = state.p1.iter().sum();
            for v in &mut state.p1 {
                *v /= s;
            }
        }
        for y in 0..ny {
            for a in 0..m1 {
                let mut bump = false;
                for b in 0..m2 {
                    if grow2[y][a][b] >= 100 && state.p2[y][a][b] < 1e-3 {
                        state.p2[y][a][b] = 1e-3;
                        grow2[y][a][b] = 0;
                        bump = true;
                    }
                }
                if bump {
                    bumped = true;
                    let s: f64 = state.p2[y][a].iter().sum();
                    for v in &mut state.p2[y][a] {
                        *v /= s;
                    }
                }
            }
        }
        if bumped {
            // A discontinuous jump invalidates the geometric-mode snapshots.
            snap.clear();
        }

        // Second exit for the flat near-zero-rate regime (small multipliers):
        // there the iterate drifts toward a degenerate support harmonically
        // (error ~ c/iter) while the certificate is already tiny; such calls
        // are bisection probes far from their target, where the retained
        // quantities only need to be accurate to the probe's decision scale.
        let stalled = iter >= 2000 && gap < 1e-6 && (obj - prev_obj).abs() < 1e-13;
        // A certificate this small that is still open after this long is a
        // near-flat crawl; the retained readouts are already far more
        // accurate than any decision they feed.
        let soft = iter >= 30_000 && gap < 1e-5;
        if (gap < GAP_TOL && ((obj - prev_obj).abs() < RATE_TOL || iter >= 5000)) || stalled || soft {
            return Ok(FpOut {
                i1: i1.max(0.0),
                e1,
                e2,
                lb,
                lb2,
            });
        }
        prev_obj = obj;
        // Safeguard: drop an extrapolation whose certificate got worse.
        // Judge an extrapolation only after a grace period: a jump along the
        // slow mode transiently inflates the certificate until the fast
        // modes re-equilibrate around the new position.
        if pending.as_ref().is_some_and(|p| iter >= p.2) {
            let (saved, gap_before, _) = pending.take().unwrap();
            if gap > gap_before {
                *state = saved;
                snap.clear();
                cooldown = iter + 2 * SNAP;
            }
        }
        // Aitken Δ² extrapolation of the dominant slow mode from three
        // spaced snapshots, kept only if the certificate keeps improving.
        if iter > 0 && iter % SNAP == 0 && iter >= cooldown && pending.is_none() && gap < 1e-3 {
            snap.push(state.clone());
            if snap.len() == 3 {
                let saved = state.clone();
                for a in 0..m1 {
                    state.p1[a] =
                        crate::rd::geometric_step(snap[0].p1[a], snap[1].p1[a], snap[2].p1[a]);
                }
                let s: f64 = state.p1.iter().sum();
                for v in &mut state.p1 {
                    *v /= s;
                }
                for y in 0..ny {
                    for a in 0..m1 {
                        for b in 0..m2 {
                            state.p2[y][a][b] = crate::rd::geometric_step(
                                snap[0].p2[y][a][b],
                                snap[1].p2[y][a][b],
                                snap[2].p2[y][a][b],
                            );
                        }
                        let s: f64 = state.p2[y][a].iter().sum();
                        if s > 0.0 {
                            for v in &mut state.p2[y][a] {
                                *v /= s;
                            }
                        }
                    }
                }
                snap.clear();
                pending = Some((saved, gap, iter + 200));
            }
        }
        if iter == MAX_INNER - 1 {
            // Harmonic-drift tail that never quite met the stall test:
            // accept when the certificate is still small.
            if gap < 1e-5 {
                if std::env::var("FBLSC_DEBUG").is_ok() {
                    eprintln!("FPSOFT xi={xi:.3e} l1={l1:.6e} l2={l2:.6e} gap={gap:.2e} e1={e1:.8} e2={e2:.8} i1={i1:.8}");
                }
                return Ok(FpOut {
                    i1: i1.max(0.0),
                    e1,
                    e2,
                    lb,
                    lb2,
                });
            }
            eprintln!("FPFAIL xi={xi:.6e} l1={l1:.6e} l2={l2:.6e} gap={gap:.6e} obj={obj:.12} e1={e1:.8} e2={e2:.8}");
            return Err(FblscError::ConvergenceFailure {
                iterations: MAX_INNER,
                residual: gap,
            });
        }
    }
    unreachable!()
}

struct Ctx<'a> {
    probs: &'a [f64],
    g: &'a [usize],
    d1: &'a [Vec<f64>],
    d2: &'a [Vec<f64>],
    big_d1: f64,
    big_d2: f64,
}

/// Pick the cached converged state whose multiplier is log-nearest to `l`.
/// Each bisection keeps the states its probes converged to and warm-starts
/// every new probe from the nearest one: a probe below the root collapses
/// support that would otherwise revive only at ~multiplier speed, so
/// inheriting state from whatever probe happened to run last poisons the
/// probes that follow it.
fn nearest<'s>(cache: &'s [(f64, State)], l: f64) -> Option<&'s State> {
    let k = |a: f64| a.max(1e-9).ln();
    cache
        .iter()
        .min_by(|x, y| (k(x.0) - k(l)).abs().total_cmp(&(k(y.0) - k(l)).abs()))
        .map(|e| &e.1)
}

fn take_state(cache: Vec<(f64, State)>, l: f64) -> Option<State> {
    cache.into_iter().rev().find(|e| e.0 == l).map(|e| e.1)
}

fn probe2(
    ctx: &Ctx,
    xi: f64,
    l1: f64,
    l2: f64,
    base: &State,
    cache: &mut Vec<(f64, State)>,
) -> Result<FpOut> {
    let mut st = nearest(cache, l2).cloned().unwrap_or_else(|| base.clone());
    let out = fixed_point(ctx.probs, ctx.g, ctx.d1, ctx.d2, xi, l1, l2, &mut st)?;
    cache.push((l2, st));
    Ok(out)
}

/// Innermost search: bisect λ₂ on E[d₂] = D₂ at fixed (ξ, λ₁). `hint`
/// carries the previous root so repeat calls bracket around it instead of
/// rediscovering it from scratch. Slackness is decided by an exact λ₂ = 0
/// probe warm-started from a small-λ₂ one: the λ₂ = 0 fixed-point set can be
/// a flat valley along which E[d₂] varies, and only a state parked at its
/// min-E[d₂] end answers whether a feasible minimizer exists.
fn solve_l2(ctx: &Ctx, xi: f64, l1: f64, state: &mut State, hint: &mut f64) -> Result<(f64, FpOut)> {
    let base = state.clone();
    let mut cache: Vec<(f64, State)> = Vec::new();
    let mut lo;
    let mut hi;
    let mut best: Option<(f64, FpOut)> = None;
    if *hint > 0.0 {
        lo = *hint / 8.0;
        hi = *hint * 8.0;
        // Walk the lower edge down until it sits on the infeasible side.
        let mut vanished = false;
        loop {
            let out = probe2(ctx, xi, l1, lo, &base, &mut cache)?;
            if out.e2 >= ctx.big_d2 {
                break;
            }
            hi = lo;
            best = Some((lo, out));
            lo /= 8.0;
            if lo < 1e-8 {
                vanished = true;
                break;
            }
        }
        if vanished {
            let out0 = probe2(ctx, xi, l1, 0.0, &base, &mut cache)?;
            if out0.e2 <= ctx.big_d2 + 1e-12 {
                *hint = 0.0;
                *state = take_state(cache, 0.0).unwrap();
                return Ok((0.0, out0));
            }
            lo = 0.0;
        }
    } else {
        let park = probe2(ctx, xi, l1, 1e-3, &base, &mut cache)?;
        if park.e2 < ctx.big_d2 {
            let out0 = probe2(ctx, xi, l1, 0.0, &base, &mut cache)?;
            if out0.e2 <= ctx.big_d2 + 1e-12 {
                *state = take_state(cache, 0.0).unwrap();
                return Ok((0.0, out0));
            }
            lo = 0.0;
            hi = 1e-3;
            best = Some((1e-3, park));
        } else {
            lo = 1e-3;
            hi = 1.0;
        }
    }
    // Walk the upper edge up until it reaches the feasible side.
    if best.is_none() || best.as_ref().is_some_and(|b| b.0 < hi) {
        loop {
            let out = probe2(ctx, xi, l1, hi, &base, &mut cache)?;
            if out.e2 < ctx.big_d2 {
                best = Some((hi, out));
                break;
            }
            lo = hi;
            hi *= 2.0;
            if hi > 1e15 {
                return Err(FblscError::ConvergenceFailure {
                    iterations: 0,
                    residual: out.e2 - ctx.big_d2,
                });
            }
        }
    }
    let (mut best_l, mut best) = best.unwrap();
    for _ in 0..200 {
        if hi - lo < 1e-12 * hi.max(1.0) || hi - lo < 1e-8 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let out = probe2(ctx, xi, l1, mid, &base, &mut cache)?;
        let close = (out.e2 - ctx.big_d2).abs() < 1e-11;
        if out.e2 > ctx.big_d2 && !close {
            lo = mid;
        } else {
            hi = mid;
            best_l = mid;
            best = out;
            if close {
                break;
            }
        }
    }
    if best_l < 1e-5 {
        // A root this small is bisection noise from a flat valley; report a
        // slack constraint and re-read the solution at the exact limit.
        let out0 = probe2(ctx, xi, l1, 0.0, &base, &mut cache)?;
        *hint = 0.0;
        *state = take_state(cache, 0.0).unwrap();
        return Ok((0.0, out0));
    }
    *hint = best_l;
    *state = take_state(cache, best_l).unwrap();
    Ok((best_l, best))
}

fn probe1(
    ctx: &Ctx,
    xi: f64,
    l1: f64,
    base: &State,
    cache: &mut Vec<(f64, State)>,
    h2: &mut f64,
) -> Result<(f64, FpOut)> {
    let mut st = nearest(cache, l1).cloned().unwrap_or_else(|| base.clone());
    let r = solve_l2(ctx, xi, l1, &mut st, h2)?;
    cache.push((l1, st));
    Ok(r)
}

/// Middle search: bisect λ₁ on E[d₁] = D₁ at fixed ξ, with the same hint,
/// cache and park-then-probe-zero scheme as the inner search.
fn solve_l1(
    ctx: &Ctx,
    xi: f64,
    state: &mut State,
    h1: &mut f64,
    h2: &mut f64,
) -> Result<(f64, f64, FpOut)> {
    let base = state.clone();
    let mut cache: Vec<(f64, State)> = Vec::new();
    let mut lo;
    let mut hi;
    let mut best: Option<(f64, f64, FpOut)> = None;
    if *h1 > 0.0 {
        lo = *h1 / 8.0;
        hi = *h1 * 8.0;
        let mut vanished = false;
        loop {
            let (l2, out) = probe1(ctx, xi, lo, &base, &mut cache, h2)?;
            if out.e1 >= ctx.big_d1 {
                break;
            }
            hi = lo;
            best = Some((lo, l2, out));
            lo /= 8.0;
            if lo < 1e-8 {
                vanished = true;
                break;
            }
        }
        if vanished {
            let (l2_0, out0) = probe1(ctx, xi, 0.0, &base, &mut cache, h2)?;
            if out0.e1 <= ctx.big_d1 + 1e-12 {
                *h1 = 0.0;
                *state = take_state(cache, 0.0).unwrap();
                return Ok((0.0, l2_0, out0));
            }
            lo = 0.0;
        }
    } else {
        let (pl2, park) = probe1(ctx, xi, 1e-3, &base, &mut cache, h2)?;
        if park.e1 < ctx.big_d1 {
            let (l2_0, out0) = probe1(ctx, xi, 0.0, &base, &mut cache, h2)?;
            if out0.e1 <= ctx.big_d1 + 1e-12 {
                *state = take_state(cache, 0.0).unwrap();
                return Ok((0.0, l2_0, out0));
            }
            lo = 0.0;
            hi = 1e-3;
            best = Some((1e-3, pl2, park));
        } else {
            lo = 1e-3;
            hi = 1.0;
        }
    }
    if best.is_none() || best.as_ref().is_some_and(|b| b.0 < hi) {
        loop {
            let (l2, out) = probe1(ctx, xi, hi, &base, &mut cache, h2)?;
            if out.e1 < ctx.big_d1 {
                best = Some((hi, l2, out));
                break;
            }
            lo = hi;
            hi *= 2.0;
            if hi > 1e15 {
                return Err(FblscError::ConvergenceFailure {
                    iterations: 0,
                    residual: out.e1 - ctx.big_d1,
                });
            }
        }
    }
    let (mut best_l1, mut best_l2, mut best) = best.unwrap();
    for _ in 0..200 {
        if hi - lo < 1e-12 * hi.max(1.0) || hi - lo < 1e-8 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let (l2m, out) = probe1(ctx, xi, mid, &base, &mut cache, h2)?;
        let close = (out.e1 - ctx.big_d1).abs() < 1e-11;
        if out.e1 > ctx.big_d1 && !close {
            lo = mid;
        } else {
            hi = mid;
            best_l1 = mid;
            best_l2 = l2m;
            best = out;
            if close {
                break;
            }
        }
    }
    if best_l1 < 1e-5 {
        let (l2_0, out0) = probe1(ctx, xi, 0.0, &base, &mut cache, h2)?;
        *h1 = 0.0;
        *state = take_state(cache, 0.0).unwrap();
        return Ok((0.0, l2_0, out0));
    }
    *h1 = best_l1;
    *state = take_state(cache, best_l1).unwrap();
    Ok((best_l1, best_l2, best))
}

fn probe_xi(
    ctx: &Ctx,
    xi: f64,
    base: &State,
    cache: &mut Vec<(f64, State)>,
    h1: &mut f64,
    h2: &mut f64,
) -> Result<(f64, f64, FpOut)> {
    let mut st = nearest(cache, xi).cloned().unwrap_or_else(|| base.clone());
    let r = solve_l1(ctx, xi, &mut st, h1, h2)?;
    cache.push((xi, st));
    Ok(r)
}

fn cov_pair(p: &[f64], a: &[f64], b: &[f64]) -> Covariance2 {
    let ma: f64 = p.iter().zip(a).map(|(&w, &v)| w * v).sum();
    let mb: f64 = p.iter().zip(b).map(|(&w, &v)| w * v).sum();
    let mut v11 = 0.0;
    let mut v22 = 0.0;
    let mut v12 = 0.0;
    for ((&w, &va), &vb) in p.iter().zip(a).zip(b) {
        v11 += w * (va - ma) * (va - ma);
        v22 += w * (vb - mb) * (vb - mb);
        v12 += w * (va - ma) * (vb - mb);
    }
    // Guard against rounding pushing the off-diagonal past the PSD boundary.
    let cap = (v11 * v22).sqrt();
    Covariance2::new(v11, v22, v12.clamp(-cap, cap)).unwrap()
}

/// 𝖱(R₁, D₁, D₂ | P_X) for Y = g(X), with multipliers, the β/β₂ maps and the
/// tilted information density of the total-rate constraint.
pub fn fy_solution(
    p: &Pmf,
    g: &[usize],
    d1: &DistortionMatrix,
    d2: &DistortionMatrix,
    big_d1: f64,
    big_d2: f64,
    r1: f64,
) -> Result<FySolution> {
    let nx = p.len();
    if g.len() != nx {
        return Err(FblscError::DomainError(
            "g must map each source symbol to a Y index".into(),
        ));
    }
    if d1.n_source() != nx || d2.n_source() != nx {
        return Err(FblscError::DomainError(
            "distortion matrices must be indexed by the source alphabet".into(),
        ));
    }
    let ny = g.iter().max().map_or(0, |&y| y + 1);
    // Feasibility: the rate constraint must admit a d₁-feasible first stage.
    let rd1 = rate_distortion(p, d1, big_d1)?;
    if r1 < rd1.rate - 1e-9 {
        return Err(FblscError::InfeasibleRate {
            r1,
            required: rd1.rate,
        });
    }
    let d2_floor: f64 = (0..nx)
        .map(|x| {
            p.prob(x)
                * (0..d2.n_repro())
                    .map(|b| d2.get(x, b))
                    .fold(f64::INFINITY, f64::min)
        })
        .sum();
    if big_d2 <= d2_floor {
        return Err(FblscError::InfeasibleDistortion {
            d: big_d2,
            d_min: d2_floor,
        });
    }

    let probs = p.probs().to_vec();
    let m1 = d1.n_repro();
    let m2 = d2.n_repro();
    let state = State {
        p1: vec![1.0 / m1 as f64; m1],
        p2: vec![vec![vec![1.0 / m2 as f64; m2]; m1]; ny],
    };

    let ctx = Ctx {
        probs: &probs,
        g,
        d1: d1.rows(),
        d2: d2.rows(),
        big_d1,
        big_d2,
    };

    // Outermost search: ξ = 0 if the rate constraint is slack, else bisect ξ
    // on I(X;X̂₁) = R₁ (decreasing in ξ). As in the inner searches, the
    // slackness test parks the state with a small tilt before probing ξ = 0,
    // because I(X;X̂₁) varies along a flat minimizer set of the relaxed
    // problem and an untilted probe reads it at an arbitrary member.
    let mut h1 = 0.0;
    let mut h2 = 0.0;
    let base = state.clone();
    let mut cache: Vec<(f64, State)> = Vec::new();
    let (park1, park2, park) = probe_xi(&ctx, 1e-3, &base, &mut cache, &mut h1, &mut h2)?;
    let (xi, lambda1, lambda2, out) = 'outer: {
        if park.i1 < r1 {
            let (l1_0, l2_0, out0) = probe_xi(&ctx, 0.0, &base, &mut cache, &mut h1, &mut h2)?;
            if out0.i1 <= r1 + 1e-10 {
                break 'outer (0.0, l1_0, l2_0, out0);
            }
            // Root in (0, 1e-3): fall through and bisect that bracket.
            let mut lo = 0.0f64;
            let mut hi = 1e-3f64;
            let (mut best_xi, mut best_l1, mut best_l2, mut best) = (1e-3, park1, park2, park);
            for _ in 0..200 {
                if hi - lo < 1e-12 * hi.max(1.0) || hi - lo < 1e-8 {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                let (l1m, l2m, out) = probe_xi(&ctx, mid, &base, &mut cache, &mut h1, &mut h2)?;
                let close = (out.i1 - r1).abs() < 1e-11;
                if out.i1 > r1 && !close {
                    lo = mid;
                } else {
                    hi = mid;
                    best_xi = mid;
                    best_l1 = l1m;
                    best_l2 = l2m;
                    best = out;
                    if close {
                        break;
                    }
                }
            }
            if best_xi < 1e-5 {
                let (l1_0, l2_0, out0) =
                    probe_xi(&ctx, 0.0, &base, &mut cache, &mut h1, &mut h2)?;
                break 'outer (0.0, l1_0, l2_0, out0);
            }
            break 'outer (best_xi, best_l1, best_l2, best);
        }
        let mut lo = 1e-3;
        let mut hi = 1.0;
        let (mut best_l1, mut best_l2, mut best) = loop {
            let (l1h, l2h, out) = probe_xi(&ctx, hi, &base, &mut cache, &mut h1, &mut h2)?;
            if out.i1 < r1 {
                break (l1h, l2h, out);
            }
            lo = hi;
            hi *= 2.0;
            if hi > 1e9 {
                return Err(FblscError::ConvergenceFailure {
                    iterations: 0,
                    residual: out.i1 - r1,
                });
            }
        };
        let mut best_xi = hi;
        for _ in 0..200 {
            if hi - lo < 1e-12 * hi.max(1.0) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let (l1m, l2m, out) = probe_xi(&ctx, mid, &base, &mut cache, &mut h1, &mut h2)?;
            let close = (out.i1 - r1).abs() < 1e-11;
            if out.i1 > r1 && !close {
                lo = mid;
            } else {
                hi = mid;
                best_xi = mid;
                best_l1 = l1m;
                best_l2 = l2m;
                best = out;
                if close {
                    break;
                }
            }
        }
        (best_xi, best_l1, best_l2, best)
    };

    // Tilted density of the total-rate constraint (excess over H(P_Y)).
    let tilt_vals: Vec<f64> = (0..nx)
        .map(|x| (1.0 + xi) * out.lb[x] - xi * r1 - lambda1 * big_d1 - lambda2 * big_d2)
        .collect();
    let tilted = TiltedTable::from_values(tilt_vals.clone(), &probs);

    let mut py = vec![0.0; ny];
    for x in 0..nx {
        py[g[x]] += probs[x];
    }
    let neg_log_py: Vec<f64> = (0..nx)
        .map(|x| {
            if py[g[x]] > SUPPORT_EPS {
                -py[g[x]].ln()
            } else {
                0.0
            }
        })
        .collect();
    let entropy_y: f64 = probs
        .iter()
        .zip(&neg_log_py)
        .map(|(&w, &v)| w * v)
        .sum();
    let var_y: f64 = probs
        .iter()
        .zip(&neg_log_py)
        .map(|(&w, &v)| w * (v - entropy_y) * (v - entropy_y))
        .sum();

    // Total-rate density and the two covariance pairings for the region cases.
    let total: Vec<f64> = tilt_vals
        .iter()
        .zip(&neg_log_py)
        .map(|(&j, &h)| j + h)
        .collect();
    let j1 = tilted_density(&rd1, p, d1, big_d1)?;
    let cov1 = cov_pair(&probs, &j1.values, &total);
    let cov2 = cov_pair(&probs, &total, &neg_log_py);

    Ok(FySolution {
        sum_rate_excess: tilted.mean,
        xi_star: xi,
        lambda1_star: lambda1,
        lambda2_star: lambda2,
        beta: out.lb.iter().map(|&v| v.exp()).collect(),
        beta2: out
            .lb2
            .iter()
            .map(|r| r.iter().map(|&v| v.exp()).collect())
            .collect(),
        tilted,
        tilted_d1: j1,
        entropy_y,
        var_y,
        cov1,
        cov2,
        d1_achieved: out.e1,
        d2_achieved: out.e2,
        i1_achieved: out.i1,
    })
}
