//! Exact distributions of n-fold sums of finitely-valued per-symbol vectors.

use crate::error::{FblscError, Result};
use crate::prob::SUPPORT_EPS;

/// Per-symbol values closer than this are merged into one atom.
const MERGE_EPS: f64 = 1e-12;
/// Hard budget on the number of enumerated compositions.
const TYPE_BUDGET: u64 = 10_000_000;

/// Exact distribution of Σᵢ V(Xᵢ) for i.i.d. Xᵢ, as sorted (value, prob) atoms.
#[derive(Debug, Clone)]
pub struct TailDistribution {
    pub n: usize,
    /// Sorted ascending; probabilities sum to 1 within 1e-9·n.
    pub atoms: Vec<(f64, f64)>,
}

impl TailDistribution {
    /// Build by type enumeration (binomial shortcut for ≤ 2 distinct values).
    pub fn build(values: &[f64], probs: &[f64], n: usize) -> Result<Self> {
        let (v, p) = group_values(values, probs)?;
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        enumerate_types(&p, n, |counts, w| {
            let s: f64 = counts.iter().zip(&v).map(|(&k, &vi)| k as f64 * vi).sum();
            atoms.push((s, w));
        })?;
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        // Merge equal sums (within tolerance scaled to the value magnitude).
        let scale = v.iter().fold(1.0f64, |m, &x| m.max(x.abs())) * n as f64;
        let tol = MERGE_EPS * scale.max(1.0);
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (val, pr) in atoms {
            match merged.last_mut() {
                Some(last) if (val - last.0).abs() <= tol => last.1 += pr,
                _ => merged.push((val, pr)),
            }
        }
        Ok(Self { n, atoms: merged })
    }

    /// Pr{Σ ≥ t}, counting atoms within merge tolerance of t as ≥ t.
    pub fn tail_geq(&self, t: f64) -> f64 {
        let tol = MERGE_EPS * t.abs().max(1.0);
        self.atoms
            .iter()
            .filter(|&&(v, _)| v >= t - tol)
            .map(|&(_, p)| p)
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }
}

/// Exact Pr{Σᵢ V(Xᵢ) ≥ t} without materializing the atom list.
pub fn exact_sum_tail(values: &[f64], probs: &[f64], n: usize, t: f64) -> Result<f64> {
    if n == 0 {
        return Err(FblscError::DomainError("blocklength n must be ≥ 1".into()));
    }
    let (v, p) = group_values(values, probs)?;
    let scale: f64 = v.iter().fold(1.0f64, |m, &x| m.max(x.abs())) * n as f64;
    let tol = MERGE_EPS * scale.max(1.0);
    let mut total = 0.0;
    let mut comp = 0.0; // Kahan compensation
    enumerate_types(&p, n, |counts, w| {
        let s: f64 = counts.iter().zip(&v).map(|(&k, &vi)| k as f64 * vi).sum();
        if s >= t - tol {
            let y = w - comp;
            let tt = total + y;
            comp = (tt - total) - y;
            total = tt;
        }
    })?;
    Ok(total.clamp(0.0, 1.0))
}

/// Exact Pr{ ∃ j : Σᵢ Vⱼ(Xᵢ) ≥ tⱼ } by joint type enumeration: `coords[x]`
/// holds the per-coordinate values of symbol x.
pub fn union_tail_prob(
    coords: &[Vec<f64>],
    probs: &[f64],
    n: usize,
    thresholds: &[f64],
) -> Result<f64> {
    if n == 0 {
        return Err(FblscError::DomainError("blocklength n must be ≥ 1".into()));
    }
    let ncoord = thresholds.len();
    if coords.iter().any(|c| c.len() != ncoord) {
        return Err(FblscError::DomainError(
            "per-symbol coordinate count does not match thresholds".into(),
        ));
    }
    let (tuples, p) = group_tuples(coords, probs)?;
    let tols: Vec<f64> = (0..ncoord)
        .map(|j| {
            let scale = tuples.iter().fold(1.0f64, |m, t| m.max(t[j].abs())) * n as f64;
            MERGE_EPS * scale.max(1.0)
        })
        .collect();
    let mut total = 0.0;
    let mut comp = 0.0;
    enumerate_types(&p, n, |counts, w| {
        let hit = (0..ncoord).any(|j| {
            let s: f64 = counts
                .iter()
                .zip(&tuples)
                .map(|(&k, t)| k as f64 * t[j])
                .sum();
            s >= thresholds[j] - tols[j]
        });
        if hit {
            let y = w - comp;
            let tt = total + y;
            comp = (tt - total) - y;
            total = tt;
        }
    })?;
    Ok(total.clamp(0.0, 1.0))
}

/// Drop zero-mass symbols and merge values within tolerance.
fn group_values(values: &[f64], probs: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let tuples: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
    let (t, p) = group_tuples(&tuples, probs)?;
    Ok((t.into_iter().map(|v| v[0]).collect(), p))
}

fn group_tuples(coords: &[Vec<f64>], probs: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    if coords.len() != probs.len() {
        return Err(FblscError::DomainError(
            "values/probs length mismatch".into(),
        ));
    }
    let mut gv: Vec<Vec<f64>> = Vec::new();
    let mut gp: Vec<f64> = Vec::new();
    for (t, &p) in coords.iter().zip(probs) {
        if p <= SUPPORT_EPS {
            continue;
        }
        let scale_tol = |a: f64| MERGE_EPS * a.abs().max(1.0);
        if let Some(k) = gv
            .iter()
            .position(|g| g.iter().zip(t).all(|(&a, &b)| (a - b).abs() <= scale_tol(a)))
        {
            gp[k] += p;
        } else {
            gv.push(t.clone());
            gp.push(p);
        }
    }
    Ok((gv, gp))
}

/// Number of compositions of n into m nonnegative parts: C(n+m−1, m−1).
fn composition_count(n: usize, m: usize) -> u64 {
    let mut c: u64 = 1;
    for i in 0..(m - 1) {
        c = c.saturating_mul((n + m - 1 - i) as u64) / (i as u64 + 1);
        if c > 100 * TYPE_BUDGET {
            return u64::MAX;
        }
    }
    c
}

/// Visit every composition (k₁,…,k_m) of n with its exact multinomial
/// probability weight, computed in log space.
fn enumerate_types<F: FnMut(&[usize], f64)>(
    probs: &[f64],
    n: usize,
    mut visit: F,
) -> Result<()> {
    let m = probs.len();
    if m == 0 {
        return Err(FblscError::DomainError("empty support".into()));
    }
    if m == 1 {
        visit(&[n], 1.0);
        return Ok(());
    }
    if composition_count(n, m) > TYPE_BUDGET {
        return Err(FblscError::BudgetExceeded(format!(
            "type count C({}+{m}-1,{m}-1) exceeds {TYPE_BUDGET}",
            n
        )));
    }
    // ln k! table.
    let mut lnf = vec![0.0f64; n + 1];
    for k in 1..=n {
        lnf[k] = lnf[k - 1] + (k as f64).ln();
    }
    let lnp: Vec<f64> = probs.iter().map(|&p| p.ln()).collect();
    let mut counts = vec![0usize; m];
    rec_types(&lnp, &lnf, n, 0, n, lnf[n], &mut counts, &mut visit);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn rec_types<F: FnMut(&[usize], f64)>(
    lnp: &[f64],
    lnf: &[f64],
    _n: usize,
    idx: usize,
    remaining: usize,
    logw: f64,
    counts: &mut [usize],
    visit: &mut F,
) {
    let m = lnp.len();
    if idx == m - 1 {
        counts[idx] = remaining;
        let lw = logw - lnf[remaining] + remaining as f64 * lnp[idx];
        visit(counts, lw.exp());
        return;
    }
    for k in 0..=remaining {
        counts[idx] = k;
        let lw = logw - lnf[k] + k as f64 * lnp[idx];
        rec_types(lnp, lnf, _n, idx + 1, remaining - k, lw, counts, visit);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_cases() {
        // n=1, threshold at the min value → probability 1.
        let p = exact_sum_tail(&[0.3, 1.7], &[0.4, 0.6], 1, 0.3).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
        // Degenerate single value.
        assert_eq!(exact_sum_tail(&[2.0, 2.0], &[0.5, 0.5], 7, 14.0).unwrap(), 1.0);
        assert_eq!(exact_sum_tail(&[2.0, 2.0], &[0.5, 0.5], 7, 14.1).unwrap(), 0.0);
    }

    #[test]
    fn matches_brute_force_binary() {
        // n=10 binary: compare against enumeration of all 2^10 sequences.
        let vals = [0.25, 1.4];
        let probs = [0.7, 0.3];
        let n = 10;
        for t in [2.5, 4.0, 6.05, 9.0] {
            let mut want = 0.0;
            for mask in 0u32..(1 << n) {
                let mut s = 0.0;
                let mut pr = 1.0;
                for i in 0..n {
                    let b = ((mask >> i) & 1) as usize;
                    s += vals[b];
                    pr *= probs[b];
                }
                if s >= t - 1e-12 {
                    want += pr;
                }
            }
            let got = exact_sum_tail(&vals, &probs, n, t).unwrap();
            assert!((got - want).abs() < 1e-12, "t={t}: {got} vs {want}");
        }
    }

    #[test]
    fn matches_brute_force_ternary() {
        let vals = [0.1, 0.9, 2.3];
        let probs = [0.5, 0.3, 0.2];
        let n = 8;
        for t in [1.0, 3.3, 7.1] {
            let mut want = 0.0;
            let mut stack = vec![(0usize, 0.0f64, 1.0f64)];
            while let Some((depth, s, pr)) = stack.pop() {
                if depth == n {
                    if s >= t - 1e-12 {
                        want += pr;
                    }
                    continue;
                }
                for b in 0..3 {
                    stack.push((depth + 1, s + vals[b], pr * probs[b]));
                }
            }
            let got = exact_sum_tail(&vals, &probs, n, t).unwrap();
            assert!((got - want).abs() < 1e-11, "t={t}: {got} vs {want}");
        }
    }

    #[test]
    fn distribution_sums_to_one() {
        let d = TailDistribution::build(&[0.1, 0.9, 2.3, 0.1], &[0.4, 0.3, 0.2, 0.1], 50)
            .unwrap();
        let s: f64 = d.atoms.iter().map(|&(_, p)| p).sum();
        assert!((s - 1.0).abs() < 1e-9 * 50.0);
        assert!(d.atoms.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn union_tail_against_brute_force() {
        let coords = vec![vec![0.0, 1.0], vec![1.0, 0.2]];
        let probs = [0.6, 0.4];
        let n = 9;
        let thr = [2.5, 4.0];
        let mut want = 0.0;
        for mask in 0u32..(1 << n) {
            let mut s = [0.0f64; 2];
            let mut pr = 1.0;
            for i in 0..n {
                let b = ((mask >> i) & 1) as usize;
                s[0] += coords[b][0];
                s[1] += coords[b][1];
                pr *= probs[b];
            }
            if s[0] >= thr[0] - 1e-12 || s[1] >= thr[1] - 1e-12 {
                want += pr;
            }
        }
        let got = union_tail_prob(&coords, &probs, n, &thr).unwrap();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn budget_guard() {
        // A 9-symbol alphabet at n=200 blows the composition budget.
        let p9 = vec![1.0 / 9.0; 9];
        let v9: Vec<f64> = (0..9).map(|i| i as f64).collect();
        assert!(matches!(
            exact_sum_tail(&v9, &p9, 200, 100.0),
            Err(FblscError::BudgetExceeded(_))
        ));
    }
}
