//! Finite probability vectors, joint matrices, channels, distortion matrices.

use crate::error::{FblscError, Result};

use super::SUPPORT_EPS;

const SUM_TOL: f64 = 1e-12;

/// Probability mass function over a finite labelled alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    labels: Vec<String>,
    probs: Vec<f64>,
}

impl Pmf {
    /// Build a pmf, validating nonnegativity, normalization, and distinct labels.
    pub fn new(labels: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if labels.len() != probs.len() {
            return Err(FblscError::DomainError(format!(
                "label/prob length mismatch: {} vs {}",
                labels.len(),
                probs.len()
            )));
        }
        if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(FblscError::DomainError(
                "pmf entries must be finite and nonnegative".into(),
            ));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(FblscError::DomainError(format!(
                "pmf entries sum to {s}, expected 1"
            )));
        }
        for i in 0..labels.len() {
            for j in (i + 1)..labels.len() {
                if labels[i] == labels[j] {
                    return Err(FblscError::DomainError(format!(
                        "duplicate label {:?}",
                        labels[i]
                    )));
                }
            }
        }
        // Renormalize away sums off by less than the validation slack so
        // downstream exact identities hold to SUM_TOL.
        let probs = if (s - 1.0).abs() > SUM_TOL {
            probs.iter().map(|p| p / s).collect()
        } else {
            probs
        };
        Ok(Self { labels, probs })
    }

    /// Pmf with labels "0", "1", ... from raw weights (normalized).
    pub fn from_probs(probs: &[f64]) -> Result<Self> {
        let labels = (0..probs.len()).map(|i| i.to_string()).collect();
        Self::new(labels, probs.to_vec())
    }

    /// Bernoulli(p) over labels "0", "1" with P(1) = p.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(FblscError::DomainError(format!("Bernoulli p = {p}")));
        }
        Self::from_probs(&[1.0 - p, p])
    }

    /// Uniform over k symbols.
    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(FblscError::DomainError("uniform over empty alphabet".into()));
        }
        Self::from_probs(&vec![1.0 / k as f64; k])
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, i: usize) -> f64 {
        self.probs[i]
    }

    /// Indices with mass above the support threshold.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.probs[i] > SUPPORT_EPS)
            .collect()
    }
}

/// Joint pmf over a product of two finite alphabets.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    row_labels: Vec<String>,
    col_labels: Vec<String>,
    probs: Vec<Vec<f64>>,
}

impl JointPmf {
    pub fn new(
        row_labels: Vec<String>,
        col_labels: Vec<String>,
        probs: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if probs.len() != row_labels.len()
            || probs.iter().any(|r| r.len() != col_labels.len())
        {
            return Err(FblscError::DomainError("joint pmf shape mismatch".into()));
        }
        if probs
            .iter()
            .flatten()
            .any(|&p| !(p >= 0.0) || !p.is_finite())
        {
            return Err(FblscError::DomainError(
                "joint pmf entries must be finite and nonnegative".into(),
            ));
        }
        let s: f64 = probs.iter().flatten().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(FblscError::DomainError(format!(
                "joint pmf sums to {s}, expected 1"
            )));
        }
        let probs = if (s - 1.0).abs() > SUM_TOL {
            probs
                .into_iter()
                .map(|r| r.into_iter().map(|p| p / s).collect())
                .collect()
        } else {
            probs
        };
        Ok(Self {
            row_labels,
            col_labels,
            probs,
        })
    }

    pub fn from_matrix(probs: &[Vec<f64>]) -> Result<Self> {
        let rl = (0..probs.len()).map(|i| i.to_string()).collect();
        let cl = (0..probs.first().map_or(0, |r| r.len()))
            .map(|j| j.to_string())
            .collect();
        Self::new(rl, cl, probs.to_vec())
    }

    /// Doubly symmetric binary source: X ~ Bern(1/2), Y = X ⊕ Bern(p).
    pub fn dsbs(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(FblscError::DomainError(format!("DSBS p = {p}")));
        }
        Self::from_matrix(&[
            vec![(1.0 - p) / 2.0, p / 2.0],
            vec![p / 2.0, (1.0 - p) / 2.0],
        ])
    }

    pub fn nrows(&self) -> usize {
        self.probs.len()
    }

    pub fn ncols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.probs[i][j]
    }

    pub fn row_marginal(&self) -> Pmf {
        let probs: Vec<f64> = self.probs.iter().map(|r| r.iter().sum()).collect();
        Pmf::new(self.row_labels.clone(), probs).expect("marginal of valid joint")
    }

    pub fn col_marginal(&self) -> Pmf {
        let probs: Vec<f64> = (0..self.ncols())
            .map(|j| self.probs.iter().map(|r| r[j]).sum())
            .collect();
        Pmf::new(self.col_labels.clone(), probs).expect("marginal of valid joint")
    }

    /// Conditional P_{X|Y}(·|y) rows indexed by column symbol, skipping
    /// zero-mass columns (their rows are uniform placeholders).
    pub fn cond_rows_given_col(&self) -> Vec<Vec<f64>> {
        let py = self.col_marginal();
        (0..self.ncols())
            .map(|j| {
                if py.prob(j) > SUPPORT_EPS {
                    (0..self.nrows()).map(|i| self.probs[i][j] / py.prob(j)).collect()
                } else {
                    vec![1.0 / self.nrows() as f64; self.nrows()]
                }
            })
            .collect()
    }
}

/// Conditional pmf (channel): one output pmf per input symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct CondPmf {
    input_labels: Vec<String>,
    output_labels: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl CondPmf {
    pub fn new(
        input_labels: Vec<String>,
        output_labels: Vec<String>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if rows.len() != input_labels.len()
            || rows.iter().any(|r| r.len() != output_labels.len())
        {
            return Err(FblscError::DomainError("channel shape mismatch".into()));
        }
        for r in &rows {
            if r.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                return Err(FblscError::DomainError(
                    "channel rows must be finite and nonnegative".into(),
                ));
            }
            let s: f64 = r.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(FblscError::DomainError(format!(
                    "channel row sums to {s}, expected 1"
                )));
            }
        }
        let rows = rows
            .into_iter()
            .map(|r| {
                let s: f64 = r.iter().sum();
                if (s - 1.0).abs() > SUM_TOL {
                    r.into_iter().map(|p| p / s).collect()
                } else {
                    r
                }
            })
            .collect();
        Ok(Self {
            input_labels,
            output_labels,
            rows,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let il = (0..rows.len()).map(|i| i.to_string()).collect();
        let ol = (0..rows.first().map_or(0, |r| r.len()))
            .map(|j| j.to_string())
            .collect();
        Self::new(il, ol, rows.to_vec())
    }

    /// Binary symmetric channel with crossover probability q.
    pub fn bsc(q: f64) -> Result<Self> {
        Self::from_rows(&[vec![1.0 - q, q], vec![q, 1.0 - q]])
    }

    /// Binary erasure channel: outputs {0, e, 1}, erasure probability delta.
    pub fn bec(delta: f64) -> Result<Self> {
        CondPmf::new(
            vec!["0".into(), "1".into()],
            vec!["0".into(), "e".into(), "1".into()],
            vec![
                vec![1.0 - delta, delta, 0.0],
                vec![0.0, delta, 1.0 - delta],
            ],
        )
    }

    pub fn identity(k: usize) -> Result<Self> {
        let rows: Vec<Vec<f64>> = (0..k)
            .map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn n_inputs(&self) -> usize {
        self.rows.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.output_labels.len()
    }

    pub fn input_labels(&self) -> &[String] {
        &self.input_labels
    }

    pub fn output_labels(&self) -> &[String] {
        &self.output_labels
    }

    pub fn prob(&self, input: usize, output: usize) -> f64 {
        self.rows[input][output]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Joint pmf induced by an input distribution.
    pub fn joint_with(&self, input: &Pmf) -> Result<JointPmf> {
        if input.len() != self.n_inputs() {
            return Err(FblscError::DomainError(
                "input pmf does not match channel input alphabet".into(),
            ));
        }
        let probs = (0..self.n_inputs())
            .map(|i| {
                (0..self.n_outputs())
                    .map(|j| input.prob(i) * self.rows[i][j])
                    .collect()
            })
            .collect();
        JointPmf::new(
            input.labels().to_vec(),
            self.output_labels.clone(),
            probs,
        )
    }
}

/// Per-pair distortion measure d(x, x̂) ≥ 0, finite (bounded distortion).
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionMatrix {
    source_labels: Vec<String>,
    repro_labels: Vec<String>,
    d: Vec<Vec<f64>>,
}

impl DistortionMatrix {
    pub fn new(
        source_labels: Vec<String>,
        repro_labels: Vec<String>,
        d: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if d.len() != source_labels.len() || d.iter().any(|r| r.len() != repro_labels.len()) {
            return Err(FblscError::DomainError("distortion shape mismatch".into()));
        }
        if d.iter().flatten().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(FblscError::DomainError(
                "distortion entries must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            source_labels,
            repro_labels,
            d,
        })
    }

    pub fn from_matrix(d: &[Vec<f64>]) -> Result<Self> {
        let sl = (0..d.len()).map(|i| i.to_string()).collect();
        let rl = (0..d.first().map_or(0, |r| r.len()))
            .map(|j| j.to_string())
            .collect();
        Self::new(sl, rl, d.to_vec())
    }

    /// Hamming distortion on a k-symbol alphabet.
    pub fn hamming(k: usize) -> Result<Self> {
        let d: Vec<Vec<f64>> = (0..k)
            .map(|i| (0..k).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
            .collect();
        Self::from_matrix(&d)
    }

    pub fn n_source(&self) -> usize {
        self.d.len()
    }

    pub fn n_repro(&self) -> usize {
        self.repro_labels.len()
    }

    pub fn source_labels(&self) -> &[String] {
        &self.source_labels
    }

    pub fn repro_labels(&self) -> &[String] {
        &self.repro_labels
    }

    pub fn get(&self, x: usize, xhat: usize) -> f64 {
        self.d[x][xhat]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.d
    }
}

/// 2×2 covariance matrix (rate-dispersion matrix of a bivariate CLT).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covariance2 {
    pub v11: f64,
    pub v22: f64,
    pub v12: f64,
}

impl Covariance2 {
    pub fn new(v11: f64, v22: f64, v12: f64) -> Result<Self> {
        if v11 < 0.0 || v22 < 0.0 || v12 * v12 > v11 * v22 + 1e-12 {
            return Err(FblscError::DomainError(format!(
                "covariance not PSD: v11={v11}, v22={v22}, v12={v12}"
            )));
        }
        Ok(Self { v11, v22, v12 })
    }

    /// Correlation coefficient, clamped to [-1, 1]; 0 when degenerate.
    pub fn rho(&self) -> f64 {
        let denom = (self.v11 * self.v22).sqrt();
        if denom <= 0.0 {
            0.0
        } else {
            (self.v12 / denom).clamp(-1.0, 1.0)
        }
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let tr = self.v11 + self.v22;
        let det = self.v11 * self.v22 - self.v12 * self.v12;
        let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
        (tr / 2.0 - disc, tr / 2.0 + disc)
    }

    /// Numerical rank at the given eigenvalue threshold.
    pub fn rank(&self, threshold: f64) -> usize {
        let (lo, hi) = self.eigenvalues();
        (lo > threshold) as usize + (hi > threshold) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pmf_rejects_bad_inputs() {
        assert!(Pmf::from_probs(&[0.5, 0.6]).is_err());
        assert!(Pmf::from_probs(&[-0.1, 1.1]).is_err());
        assert!(Pmf::new(vec!["a".into(), "a".into()], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn joint_marginals() {
        let j = JointPmf::dsbs(0.1).unwrap();
        let px = j.row_marginal();
        assert!((px.prob(0) - 0.5).abs() < 1e-15);
        assert!((px.prob(1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn covariance_rank() {
        let c = Covariance2::new(1.0, 1.0, 1.0).unwrap();
        assert_eq!(c.rank(1e-9), 1);
        let c = Covariance2::new(1.0, 1.0, 0.5).unwrap();
        assert_eq!(c.rank(1e-9), 2);
        assert!(Covariance2::new(1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn channel_joint() {
        let ch = CondPmf::bsc(0.1).unwrap();
        let j = ch.joint_with(&Pmf::bernoulli(0.5).unwrap()).unwrap();
        assert!((j.prob(0, 1) - 0.05).abs() < 1e-15);
    }
}
