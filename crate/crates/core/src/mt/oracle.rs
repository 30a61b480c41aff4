//! Closed-form oracle: the worked examples with analytic answers, evaluated
//! directly from their formulas (all in nats). Used to certify the generic
//! solvers.

use crate::error::{FblscError, Result};
use crate::prob::binary_entropy;

const LN2: f64 = std::f64::consts::LN_2;

/// Named closed-form quantities for one example at one parameter point.
#[derive(Debug, Clone)]
pub struct ClosedFormResult {
    pub example: String,
    pub quantities: Vec<(String, f64)>,
}

impl ClosedFormResult {
    /// Fetch a quantity by name; panics if absent (test-oracle usage).
    pub fn get(&self, name: &str) -> f64 {
        self.quantities
            .iter()
            .find(|(n, _)| n == name)
            .unwrap_or_else(|| panic!("oracle {} has no quantity {name}", self.example))
            .1
    }
}

fn param(params: &[(&str, f64)], name: &str) -> Result<f64> {
    params
        .iter()
        .find(|(n, _)| *n == name)
        .map(|&(_, v)| v)
        .ok_or_else(|| FblscError::DomainError(format!("missing oracle parameter {name}")))
}

fn check(ok: bool, violated: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(FblscError::OutOfValidityRegion {
            violated: violated.to_string(),
        })
    }
}

/// Binary memoryless dispersion V(p) = p(1−p)log²((1−p)/p).
fn v_bin(p: f64) -> f64 {
    p * (1.0 - p) * ((1.0 - p) / p).ln().powi(2)
}

/// Evaluate a closed-form example. Supported ids: `bms`, `noisy_bec`,
/// `kaspi_bec`, `kaspi_dsbs`, `sr_binary`, `fy_example`, `gw_dsbs`; parameter
/// names follow the solver conventions (`p`/`delta`, `d`/`d1`/`d2`/`delta_d`).
pub fn closed_form_oracle(example_id: &str, params: &[(&str, f64)]) -> Result<ClosedFormResult> {
    let q = |quantities: Vec<(&str, f64)>| ClosedFormResult {
        example: example_id.to_string(),
        quantities: quantities
            .into_iter()
            .map(|(n, v)| (n.to_string(), v))
            .collect(),
    };
    match example_id {
        // BMS(p) under Hamming at D: R = H_b(p) − H_b(D).
        "bms" => {
            let p = param(params, "p")?;
            let d = param(params, "d")?;
            check(p > 0.0 && p < 1.0, "0 < p < 1")?;
            check(d > 0.0 && d < p.min(1.0 - p), "0 < D < min(p, 1-p)")?;
            Ok(q(vec![
                ("rate", binary_entropy(p) - binary_entropy(d)),
                ("lambda", ((1.0 - d) / d).ln()),
                ("v", v_bin(p)),
            ]))
        }
        // Uniform binary source observed through BEC(δ), Hamming at D.
        "noisy_bec" => {
            let delta = param(params, "delta")?;
            let d = param(params, "d")?;
            check(delta > 0.0 && delta < 1.0, "0 < delta < 1")?;
            check(d > 0.5 * delta && d < 0.5, "delta/2 < D < 1/2")?;
            let arg = (d - 0.5 * delta) / (1.0 - delta);
            let lam = ((1.0 - d - 0.5 * delta) / (d - 0.5 * delta)).ln();
            let v_sur = delta * (1.0 - delta) * (lam / 2.0).cosh().ln().powi(2);
            Ok(q(vec![
                ("rate", (1.0 - delta) * (LN2 - binary_entropy(arg))),
                ("lambda", lam),
                ("v_tilde", v_sur + delta * lam * lam / 4.0),
                ("v_surrogate", v_sur),
            ]))
        }
        // Two decoders, side information Y = X through an erasure channel of
        // probability p, both Hamming.
        "kaspi_bec" => {
            let p = param(params, "p")?;
            let d1 = param(params, "d1")?;
            let d2 = param(params, "d2")?;
            check(p > 0.0 && p < 1.0, "0 < p < 1")?;
            check(d1 > 0.0 && d1 <= 0.5, "0 < D1 <= 1/2")?;
            check(d2 > 0.0, "D2 > 0")?;
            check(d2 >= d1 - (1.0 - p) / 2.0, "D2 >= D1 - (1-p)/2")?;
            check(d2 <= p * d1, "D2 <= p*D1")?;
            let l1 = ((1.0 - p - (d1 - d2)) / (d1 - d2)).ln();
            let l2 = -l1 + ((p - d2) / d2).ln();
            Ok(q(vec![
                (
                    "rate",
                    LN2 - (1.0 - p) * binary_entropy((d1 - d2) / (1.0 - p))
                        - p * binary_entropy(d2 / p),
                ),
                ("lambda1", l1),
                ("lambda2", l2),
                ("alpha_00", 2.0 / (1.0 + (-l1).exp())),
                ("alpha_0e", 2.0 / (1.0 + (-l1 - l2).exp())),
                (
                    "v",
                    p * (1.0 - p)
                        * (((p - d2) / p).ln() - ((1.0 - p - (d1 - d2)) / (1.0 - p)).ln())
                            .powi(2),
                ),
            ]))
        }
        // Two decoders with DSBS(p) side information: degenerate regimes
        // where the problem collapses to a single-decoder rate function.
        "kaspi_dsbs" => {
            let p = param(params, "p")?;
            let d1 = param(params, "d1")?;
            let d2 = param(params, "d2")?;
            check(p > 0.0 && p < 0.5, "0 < p < 1/2")?;
            if d1 >= 0.5 && d2 >= p {
                Ok(q(vec![("rate", 0.0), ("v", 0.0)]))
            } else if d1 < 0.5 && d2 >= p.min(d1) {
                check(d1 > 0.0, "D1 > 0")?;
                Ok(q(vec![
                    ("rate", LN2 - binary_entropy(d1)),
                    ("v", 0.0),
                ]))
            } else if d1 >= d2 + (1.0 - 2.0 * p) / 2.0 && d2 < p {
                check(d2 > 0.0, "D2 > 0")?;
                Ok(q(vec![
                    ("rate", binary_entropy(p) - binary_entropy(d2)),
                    ("v", v_bin(p)),
                ]))
            } else {
                Err(FblscError::OutOfValidityRegion {
                    violated: "no closed-form regime covers (D1, D2)".into(),
                })
            }
        }
        // Successively refinable BMS(p): base distortion D1, refined D2.
        "sr_binary" => {
            let p = param(params, "p")?;
            let d1 = param(params, "d1")?;
            let d2 = param(params, "d2")?;
            check(p > 0.0 && p < 1.0, "0 < p < 1")?;
            check(
                d2 > 0.0 && d2 < d1 && d1 < p.min(1.0 - p),
                "0 < D2 < D1 < min(p, 1-p)",
            )?;
            Ok(q(vec![
                ("sum_rate", binary_entropy(p) - binary_entropy(d2)),
                ("rate_d1", binary_entropy(p) - binary_entropy(d1)),
                ("xi", 0.0),
                ("nu1", 0.0),
                ("nu2", ((1.0 - d2) / d2).ln()),
                // ȷ(·,D) = ı(·) − H_b(D): every entry of the rate-dispersion
                // matrix equals V(p) (rank one).
                ("v", v_bin(p)),
            ]))
        }
        // X = (S1, S2), S2 = S1 through an erasure channel of probability p,
        // Y = S2 reproduced losslessly; both lossy decoders target S1.
        "fy_example" => {
            let p = param(params, "p")?;
            let d1 = param(params, "d1")?;
            let d2 = param(params, "d2")?;
            check(p > 0.0 && p < 1.0, "0 < p < 1")?;
            check(d1 > 0.0 && d1 <= 0.5, "0 < D1 <= 1/2")?;
            check(d2 > 0.0, "D2 > 0")?;
            check(d2 >= d1 - (1.0 - p) / 2.0, "D2 >= D1 - (1-p)/2")?;
            check(d2 <= p * d1, "D2 <= p*D1")?;
            let l1 = ((1.0 - p) / (d1 - d2) - 1.0).ln();
            let l2 = -l1 + (p / d2 - 1.0).ln();
            let a0 = (2.0 / (1.0 + (-l1).exp())).ln() - l1 * d1 - l2 * d2;
            let ae = (2.0 / (1.0 + (-l1 - l2).exp())).ln() - l1 * d1 - l2 * d2;
            let g1 = LN2
                - (1.0 - p) * binary_entropy((d1 - d2) / (1.0 - p))
                - p * binary_entropy(d2 / p);
            let g2 = p * (1.0 - p)
                * ((1.0 - d2 / p).ln() - (1.0 - (d1 - d2) / (1.0 - p)).ln()).powi(2);
            let g3 = (1.0 - p) * a0 * (2.0 / (1.0 - p)).ln() + p * ae * (1.0 / p).ln();
            let hy = (1.0 - p) * LN2 + binary_entropy(p);
            let vy = p * (1.0 - p) * (2.0 * p / (1.0 - p)).ln().powi(2);
            Ok(q(vec![
                ("rate", g1),
                ("xi", 0.0),
                ("lambda1", l1),
                ("lambda2", l2),
                ("tilted_unerased", a0),
                ("tilted_erased", ae),
                ("entropy_y", hy),
                ("var_y", vy),
                ("v_total", 2.0 * (g3 - hy * g1) + g2 + vy),
            ]))
        }
        // DSBS(p) common-rate construction on the sum-rate-optimal plane:
        // common distortion target D refined from an intermediate level Δ.
        "gw_dsbs" => {
            let p = param(params, "p")?;
            let d = param(params, "d")?;
            let delta_d = param(params, "delta_d")?;
            check(p > 0.0 && p < 0.5, "0 < p < 1/2")?;
            let p1 = 0.5 - 0.5 * (1.0 - 2.0 * p).sqrt();
            check(d > 0.0 && d <= delta_d, "0 < D <= Delta")?;
            check(delta_d <= p1, "Delta <= p1")?;
            Ok(q(vec![
                ("r0", LN2 + binary_entropy(p) - 2.0 * binary_entropy(delta_d)),
                ("r1", binary_entropy(delta_d) - binary_entropy(d)),
                ("r2", binary_entropy(delta_d) - binary_entropy(d)),
                ("joint_rate", LN2 + binary_entropy(p) - 2.0 * binary_entropy(d)),
                ("var_ixy", v_bin(p)),
                ("i_agree", (2.0 / (1.0 - p)).ln() - 2.0 * binary_entropy(d)),
                ("i_disagree", (2.0 / p).ln() - 2.0 * binary_entropy(d)),
            ]))
        }
        other => Err(FblscError::DomainError(format!(
            "unknown oracle example id: {other}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bms_point() {
        let r = closed_form_oracle("bms", &[("p", 0.2), ("d", 0.1)]).unwrap();
        assert!((r.get("rate") - (binary_entropy(0.2) - binary_entropy(0.1))).abs() < 1e-15);
        assert!((r.get("lambda") - 9.0f64.ln()).abs() < 1e-15);
        assert!((r.get("v") - 0.2 * 0.8 * 4.0f64.ln().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn validity_guards() {
        let e = closed_form_oracle("kaspi_bec", &[("p", 0.3), ("d1", 0.3), ("d2", 0.2)])
            .unwrap_err();
        assert!(matches!(e, FblscError::OutOfValidityRegion { .. }));
        let e = closed_form_oracle("gw_dsbs", &[("p", 0.1), ("d", 0.2), ("delta_d", 0.2)])
            .unwrap_err();
        assert!(matches!(e, FblscError::OutOfValidityRegion { .. }));
        let e = closed_form_oracle("nope", &[]).unwrap_err();
        assert!(matches!(e, FblscError::DomainError(_)));
    }

    #[test]
    fn kaspi_bec_boundary_collapses_to_plain_rd() {
        // At D2 = p·D1 the two-decoder rate meets R(P_X, D1) = log2 − H_b(D1).
        let r = closed_form_oracle("kaspi_bec", &[("p", 0.3), ("d1", 0.2), ("d2", 0.06)])
            .unwrap();
        assert!((r.get("rate") - (LN2 - binary_entropy(0.2))).abs() < 1e-12);
    }

    #[test]
    fn fy_total_dispersion_consistency() {
        // E[tilted] must reproduce the rate: (1−p)·a0 + p·ae = g1.
        let r =
            closed_form_oracle("fy_example", &[("p", 0.3), ("d1", 0.3), ("d2", 0.06)]).unwrap();
        let mean = 0.7 * r.get("tilted_unerased") + 0.3 * r.get("tilted_erased");
        assert!((mean - r.get("rate")).abs() < 1e-12, "{mean} vs {}", r.get("rate"));
    }

    #[test]
    fn gw_dsbs_identities() {
        let r = closed_form_oracle(
            "gw_dsbs",
            &[("p", 0.1), ("d", 0.05), ("delta_d", 0.05)],
        )
        .unwrap();
        assert_eq!(r.get("r1"), 0.0);
        assert!((r.get("r0") - r.get("joint_rate")).abs() < 1e-15);
        // E[ı_XY] = joint rate.
        let mean = 0.9 * r.get("i_agree") + 0.1 * r.get("i_disagree");
        assert!((mean - r.get("joint_rate")).abs() < 1e-12);
    }
}
