//! Variable-length achievability via the ε-cutoff expectation.

use crate::error::{FblscError, Result};

use super::fixed::bms_ball_probs;

/// E[⟨Y⟩_ε] for a finitely-supported Y given as (value, prob) atoms:
/// the threshold η and randomization α satisfy Pr{Y>η} + α·Pr{Y=η} = ε, and
/// the ε-cutoff variable zeroes Y above η (with the α-split at η).
pub fn epsilon_cutoff_mean(atoms: &[(f64, f64)], eps: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(FblscError::DomainError(format!(
            "epsilon_cutoff_mean needs eps in [0,1], got {eps}"
        )));
    }
    let mut sorted: Vec<(f64, f64)> = atoms.to_vec();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    // Walk down from the largest value, removing ε of mass.
    let mut remaining = eps;
    let mut mean = 0.0;
    for &(v, p) in &sorted {
        if remaining >= p {
            remaining -= p;
        } else {
            // α-fraction of this atom is zeroed.
            let alpha = remaining / p;
            mean += (1.0 - alpha) * v * p;
            remaining = 0.0;
        }
    }
    Ok(mean)
}

/// Variable-length achievability for BMS(p) under Hamming at level D:
/// E[⟨−log P*ⁿ(ℬ_D(Xⁿ))⟩_ε] with the product reproduction distribution, an
/// upper bound on the optimal average codeword length (nats).
pub fn vl_achievability_bms(p: f64, big_d: f64, n: usize, eps: f64) -> Result<f64> {
    if !(0.0 < p && p < 1.0) || big_d < 0.0 || big_d >= p.min(1.0 - p) {
        return Err(FblscError::DomainError(format!(
            "BMS variable-length bound needs 0 ≤ D < min(p,1−p); got p={p}, D={big_d}"
        )));
    }
    let atoms: Vec<(f64, f64)> = bms_ball_probs(p, big_d, n)
        .into_iter()
        .map(|(w, ball)| (-ball.max(f64::MIN_POSITIVE).ln(), w))
        .collect();
    epsilon_cutoff_mean(&atoms, eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_trivial_and_hand_oracle() {
        let atoms = [(1.0, 0.7), (3.0, 0.3)];
        // eps = 0: plain mean.
        assert!((epsilon_cutoff_mean(&atoms, 0.0).unwrap() - 1.6).abs() < 1e-12);
        // eps = 1: everything zeroed.
        assert!(epsilon_cutoff_mean(&atoms, 1.0).unwrap().abs() < 1e-12);
        // eps = 0.3: η = 3, α = 1 → E = 0.7.
        assert!((epsilon_cutoff_mean(&atoms, 0.3).unwrap() - 0.7).abs() < 1e-12);
        // eps = 0.15: half of the top atom zeroed.
        let want = 0.7 * 1.0 + 0.5 * 3.0 * 0.3;
        assert!((epsilon_cutoff_mean(&atoms, 0.15).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn vl_trivial_cases() {
        assert!(vl_achievability_bms(0.2, 0.02, 50, 1.0).unwrap().abs() < 1e-12);
        // eps = 0, n = 1, D = 0: mean of −ln P*(x) = −p ln p − (1−p)ln(1−p).
        let p: f64 = 0.2;
        let want = -p * p.ln() - (1.0 - p) * (1.0 - p).ln();
        let got = vl_achievability_bms(p, 0.0, 1, 0.0).unwrap();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn vl_decreasing_in_eps() {
        let a = vl_achievability_bms(0.2, 0.02, 100, 0.01).unwrap();
        let b = vl_achievability_bms(0.2, 0.02, 100, 0.05).unwrap();
        let c = vl_achievability_bms(0.2, 0.02, 100, 0.3).unwrap();
        assert!(a > b && b > c);
    }
}
