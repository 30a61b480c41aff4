//! Entropy, divergence, and mutual information in nats.

use crate::error::{FblscError, Result};

use super::types::{JointPmf, Pmf};
use super::SUPPORT_EPS;

/// Shannon entropy H(P) = −Σ p log p in nats, with 0 log 0 := 0.
pub fn entropy(p: &Pmf) -> f64 {
    p.probs()
        .iter()
        .filter(|&&q| q > SUPPORT_EPS)
        .map(|&q| -q * q.ln())
        .sum()
}

/// Binary entropy H_b(p) in nats.
pub fn binary_entropy(p: f64) -> f64 {
    let mut h = 0.0;
    if p > SUPPORT_EPS {
        h -= p * p.ln();
    }
    let q = 1.0 - p;
    if q > SUPPORT_EPS {
        h -= q * q.ln();
    }
    h
}

/// Mutual information I(X;Y) ≥ 0 of a joint pmf, in nats.
pub fn mutual_information(j: &JointPmf) -> f64 {
    let px = j.row_marginal();
    let py = j.col_marginal();
    let mut i = 0.0;
    for x in 0..j.nrows() {
        for y in 0..j.ncols() {
            let pxy = j.prob(x, y);
            if pxy > SUPPORT_EPS {
                i += pxy * (pxy / (px.prob(x) * py.prob(y))).ln();
            }
        }
    }
    i.max(0.0)
}

/// KL divergence D(P‖Q) in nats. Requires supp(P) ⊆ supp(Q).
pub fn kl_divergence(p: &Pmf, q: &Pmf) -> Result<f64> {
    if p.len() != q.len() {
        return Err(FblscError::DomainError(
            "KL divergence over mismatched alphabets".into(),
        ));
    }
    let mut d = 0.0;
    for i in 0..p.len() {
        let pi = p.prob(i);
        if pi > SUPPORT_EPS {
            if q.prob(i) <= SUPPORT_EPS {
                return Err(FblscError::SupportViolation {
                    symbol: p.labels()[i].clone(),
                });
            }
            d += pi * (pi / q.prob(i)).ln();
        }
    }
    Ok(d.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn entropy_endpoints() {
        assert!((entropy(&Pmf::uniform(2).unwrap()) - LN2).abs() < 1e-15);
        assert!(entropy(&Pmf::from_probs(&[1.0, 0.0]).unwrap()).abs() < 1e-15);
        // H(Bern(0.2)) by direct summation.
        let h = -(0.2f64.ln() * 0.2 + 0.8f64.ln() * 0.8);
        assert!((entropy(&Pmf::bernoulli(0.2).unwrap()) - h).abs() < 1e-12);
        assert!((h - 0.500402).abs() < 1e-6);
    }

    #[test]
    fn binary_entropy_values() {
        assert!((binary_entropy(0.5) - LN2).abs() < 1e-15);
        assert!(binary_entropy(0.0).abs() < 1e-15);
        assert!((binary_entropy(0.1) - 0.325083).abs() < 1e-6);
        assert!((binary_entropy(0.1) - binary_entropy(0.9)).abs() < 1e-14);
    }

    #[test]
    fn mi_values() {
        // Independence.
        let j = JointPmf::from_matrix(&[vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap();
        assert!(mutual_information(&j).abs() < 1e-14);
        // Y = X uniform binary.
        let j = JointPmf::from_matrix(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert!((mutual_information(&j) - LN2).abs() < 1e-14);
        // DSBS(0.1): I = log 2 − H_b(0.1), cross-checked against double sum.
        let j = JointPmf::dsbs(0.1).unwrap();
        assert!((mutual_information(&j) - (LN2 - binary_entropy(0.1))).abs() < 1e-12);
    }

    #[test]
    fn kl_values() {
        let p = Pmf::bernoulli(0.5).unwrap();
        assert!(kl_divergence(&p, &p).unwrap().abs() < 1e-15);
        let q = Pmf::bernoulli(0.25).unwrap();
        let expect = 0.5 * (0.5f64 / 0.75).ln() + 0.5 * (0.5f64 / 0.25).ln();
        assert!((kl_divergence(&p, &q).unwrap() - expect).abs() < 1e-12);
        assert!((expect - 0.143841).abs() < 1e-6);
        let r = Pmf::from_probs(&[1.0, 0.0]).unwrap();
        assert!(matches!(
            kl_divergence(&p, &r),
            Err(crate::FblscError::SupportViolation { .. })
        ));
    }
}
