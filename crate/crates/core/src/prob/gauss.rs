//! Gaussian tail functions: Q, Q⁻¹, and the bivariate normal CDF.
//!
//! `erfc` follows the classic three-region rational approximation of
//! W. J. Cody (1969), accurate to near machine precision in double
//! arithmetic. `q_inverse` starts from Acklam's rational approximation and
//! polishes with Newton steps until |Q(x) − ε| < 1e-12.

use crate::error::{FblscError, Result};

use super::types::Covariance2;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density φ(t).
pub fn normal_pdf(t: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * t * t).exp()
}

// Cody (1969) erf coefficients, |x| ≤ 0.46875.
const ERF_A: [f64; 5] = [
    3.161_123_743_870_565_6e0,
    1.138_641_541_510_501_6e2,
    3.774_852_376_853_020_2e2,
    3.209_377_589_138_469_5e3,
    1.857_777_061_846_031_5e-1,
];
const ERF_B: [f64; 4] = [
    2.360_129_095_234_412_1e1,
    2.440_246_379_344_441_7e2,
    1.282_616_526_077_372_3e3,
    2.844_236_833_439_170_6e3,
];
// erfc coefficients, 0.46875 ≤ x ≤ 4.
const ERF_C: [f64; 9] = [
    5.641_884_969_886_700_9e-1,
    8.883_149_794_388_376e0,
    6.611_919_063_714_163e1,
    2.986_351_381_974_001_3e2,
    8.819_522_212_417_691e2,
    1.712_047_612_634_070_6e3,
    2.051_078_377_826_071_5e3,
    1.230_339_354_797_997_2e3,
    2.153_115_354_744_038_5e-8,
];
const ERF_D: [f64; 8] = [
    1.574_492_611_070_983_5e1,
    1.176_939_508_913_125e2,
    5.371_811_018_620_098_6e2,
    1.621_389_574_566_690_2e3,
    3.290_799_235_733_459_7e3,
    4.362_619_090_143_247e3,
    3.439_367_674_143_721_6e3,
    1.230_339_354_803_749_4e3,
];
// erfc coefficients, x > 4.
const ERF_P: [f64; 6] = [
    3.053_266_349_612_323_4e-1,
    3.603_448_999_498_044_4e-1,
    1.257_817_261_112_292_4e-1,
    1.608_378_514_874_227_7e-2,
    6.587_491_615_298_378e-4,
    1.631_538_713_730_209_8e-2,
];
const ERF_Q: [f64; 5] = [
    2.568_520_192_289_822_4e0,
    1.872_952_849_923_460_4e0,
    5.279_051_029_514_284e-1,
    6.051_834_131_244_132e-2,
    2.335_204_976_268_691_8e-3,
];
const SQRPI: f64 = 5.641_895_835_477_562_9e-1;

fn erfc(x: f64) -> f64 {
    let y = x.abs();
    let result = if y <= 0.46875 {
        let z = y * y;
        let mut xnum = ERF_A[4] * z;
        let mut xden = z;
        for i in 0..3 {
            xnum = (xnum + ERF_A[i]) * z;
            xden = (xden + ERF_B[i]) * z;
        }
        let erf = x * (xnum + ERF_A[3]) / (xden + ERF_B[3]);
        return 1.0 - erf;
    } else if y <= 4.0 {
        let mut xnum = ERF_C[8] * y;
        let mut xden = y;
        for i in 0..7 {
            xnum = (xnum + ERF_C[i]) * y;
            xden = (xden + ERF_D[i]) * y;
        }
        let r = (xnum + ERF_C[7]) / (xden + ERF_D[7]);
        scale_by_gaussian(y, r)
    } else if y < 26.6 {
        let z = 1.0 / (y * y);
        let mut xnum = ERF_P[5] * z;
        let mut xden = z;
        for i in 0..4 {
            xnum = (xnum + ERF_P[i]) * z;
            xden = (xden + ERF_Q[i]) * z;
        }
        let mut r = z * (xnum + ERF_P[4]) / (xden + ERF_Q[4]);
        r = (SQRPI - r) / y;
        scale_by_gaussian(y, r)
    } else {
        0.0
    };
    if x < 0.0 {
        2.0 - result
    } else {
        result
    }
}

/// exp(−y²)·r computed as exp(−ysq²)·exp(−δ)·r to avoid cancellation,
/// with ysq = y rounded down to a multiple of 1/16.
fn scale_by_gaussian(y: f64, r: f64) -> f64 {
    let ysq = (y * 16.0).trunc() / 16.0;
    let del = (y - ysq) * (y + ysq);
    (-ysq * ysq).exp() * (-del).exp() * r
}

/// Standard normal CDF Φ(t).
pub fn normal_cdf(t: f64) -> f64 {
    0.5 * erfc(-t * std::f64::consts::FRAC_1_SQRT_2)
}

/// Gaussian complementary CDF Q(t) = 1 − Φ(t).
pub fn q_function(t: f64) -> f64 {
    0.5 * erfc(t * std::f64::consts::FRAC_1_SQRT_2)
}

// Acklam's inverse normal CDF rational approximation (initial guess only).
fn phi_inv_approx(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239e0,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838e0,
        -2.549_732_539_343_734e0,
        4.374_664_141_464_968e0,
        2.938_163_982_698_783e0,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996e0,
        3.754_408_661_907_416e0,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Inverse Gaussian complementary CDF: Q(q_inverse(ε)) = ε.
pub fn q_inverse(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(FblscError::DomainError(format!(
            "q_inverse requires eps in (0,1), got {eps}"
        )));
    }
    // Q⁻¹(ε) = Φ⁻¹(1 − ε) = −Φ⁻¹(ε).
    let mut x = -phi_inv_approx(eps);
    for _ in 0..50 {
        let err = q_function(x) - eps;
        if err.abs() < 1e-12 * eps.min(1.0 - eps).max(1e-3) || err.abs() < 1e-15 {
            break;
        }
        let deriv = normal_pdf(x);
        if deriv <= f64::MIN_POSITIVE {
            break;
        }
        // dQ/dx = −φ(x), so a Newton step moves by +err/φ.
        x += err / deriv;
    }
    Ok(x)
}

/// P(Z₁ ≤ x1, Z₂ ≤ x2) for zero-mean Gaussian (Z₁, Z₂) with covariance `cov`.
///
/// Computed by adaptive Simpson quadrature of
/// φ(t)·Φ((b − ρt)/√(1−ρ²)) over t ≤ a after standardization; rank-deficient
/// covariances degenerate to the univariate CDF along the ridge direction.
pub fn bivariate_normal_cdf(x1: f64, x2: f64, cov: &Covariance2) -> f64 {
    let s1 = cov.v11.sqrt();
    let s2 = cov.v22.sqrt();
    // Degenerate coordinates: a zero-variance component is the constant 0.
    if s1 <= 0.0 {
        return if x1 >= 0.0 {
            if s2 <= 0.0 {
                (x2 >= 0.0) as u8 as f64
            } else {
                normal_cdf(x2 / s2)
            }
        } else {
            0.0
        };
    }
    if s2 <= 0.0 {
        return if x2 >= 0.0 { normal_cdf(x1 / s1) } else { 0.0 };
    }
    let a = x1 / s1;
    let b = x2 / s2;
    let rho = cov.rho();
    if rho >= 1.0 - 1e-12 {
        // Z₂/σ₂ = Z₁/σ₁ a.s.: joint event is the tighter marginal.
        return normal_cdf(a.min(b));
    }
    if rho <= -1.0 + 1e-12 {
        // Z₂/σ₂ = −Z₁/σ₁ a.s.: event is −b ≤ Z ≤ a.
        return (normal_cdf(a) - normal_cdf(-b)).max(0.0);
    }
    const LOWER: f64 = -10.0;
    if a <= LOWER {
        return 0.0;
    }
    let srt = (1.0 - rho * rho).sqrt();
    let f = |t: f64| normal_pdf(t) * normal_cdf((b - rho * t) / srt);
    adaptive_simpson(&f, LOWER, a, 1e-10, 40).clamp(0.0, 1.0)
}

/// Adaptive Simpson quadrature with absolute-error target `tol`.
pub(crate) fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
) -> f64 {
    let c = 0.5 * (a + b);
    let fa = f(a);
    let fb = f(b);
    let fc = f(c);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    simpson_rec(f, a, b, fa, fb, fc, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fc: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let c = 0.5 * (a + b);
    let d = 0.5 * (a + c);
    let e = 0.5 * (c + b);
    let fd = f(d);
    let fe = f(e);
    let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_rec(f, a, c, fa, fc, fd, left, 0.5 * tol, depth - 1)
            + simpson_rec(f, c, b, fc, fb, fe, right, 0.5 * tol, depth - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_basics() {
        assert!((q_function(0.0) - 0.5).abs() < 1e-15);
        for t in [-3.0, -1.0, -0.2, 0.0, 0.7, 2.5] {
            assert!((q_function(t) + q_function(-t) - 1.0).abs() < 1e-14);
        }
        // Q(1.96) ≈ 0.0249979, a standard table value.
        assert!((q_function(1.959_963_984_540_054) - 0.025).abs() < 1e-12);
    }

    #[test]
    fn q_inverse_roundtrip() {
        assert!(q_inverse(0.5).unwrap().abs() < 1e-12);
        assert!((q_inverse(0.01).unwrap() - 2.326_348).abs() < 1e-5);
        let mut eps = 1e-8;
        while eps < 1.0 {
            let x = q_inverse(eps).unwrap();
            assert!(
                (q_function(x) - eps).abs() < 1e-9 * eps.max(1e-2),
                "roundtrip at eps={eps}"
            );
            eps *= 3.7;
        }
        assert!(q_inverse(0.0).is_err());
        assert!(q_inverse(1.0).is_err());
    }

    #[test]
    fn bivariate_independence_and_identity() {
        let cov = Covariance2::new(1.0, 4.0, 0.0).unwrap();
        for &(x1, x2) in &[(0.0, 0.0), (1.0, -1.0), (-0.5, 2.0)] {
            let want = normal_cdf(x1) * normal_cdf(x2 / 2.0);
            assert!((bivariate_normal_cdf(x1, x2, &cov) - want).abs() < 1e-8);
        }
        // Φ₂(0,0;ρ) = 1/4 + arcsin(ρ)/(2π).
        for rho in [-0.9, -0.5, 0.0, 0.3, 0.5, 0.75, 0.95] {
            let cov = Covariance2::new(1.0, 1.0, rho).unwrap();
            let want = 0.25 + rho.asin() / (2.0 * std::f64::consts::PI);
            assert!(
                (bivariate_normal_cdf(0.0, 0.0, &cov) - want).abs() < 1e-8,
                "rho={rho}"
            );
        }
        // Σ = [[1,0.5],[0.5,1]], x=(0,0) → 1/3.
        let cov = Covariance2::new(1.0, 1.0, 0.5).unwrap();
        assert!((bivariate_normal_cdf(0.0, 0.0, &cov) - 1.0 / 3.0).abs() < 1e-8);
    }

    #[test]
    fn bivariate_marginalization_and_rank1() {
        let cov = Covariance2::new(1.0, 1.0, 0.3).unwrap();
        assert!((bivariate_normal_cdf(9.0, 0.7, &cov) - normal_cdf(0.7)).abs() < 1e-8);
        let rank1 = Covariance2::new(1.0, 1.0, 1.0).unwrap();
        assert!((bivariate_normal_cdf(0.5, 1.5, &rank1) - normal_cdf(0.5)).abs() < 1e-12);
        let anti = Covariance2::new(1.0, 1.0, -1.0).unwrap();
        assert!(
            (bivariate_normal_cdf(1.0, 1.0, &anti) - (normal_cdf(1.0) - normal_cdf(-1.0))).abs()
                < 1e-12
        );
    }

    #[test]
    fn bivariate_monotone() {
        let cov = Covariance2::new(1.0, 1.0, 0.6).unwrap();
        let mut prev = 0.0;
        for i in 0..20 {
            let x = -3.0 + 0.3 * i as f64;
            let v = bivariate_normal_cdf(x, 0.4, &cov);
            assert!(v + 1e-12 >= prev);
            prev = v;
        }
    }
}
