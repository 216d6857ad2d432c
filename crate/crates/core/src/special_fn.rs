//! Univariate and bivariate standard normal functions.
//!
//! `Φ` is evaluated through the complementary error function, `Φ⁻¹` through a
//! rational approximation polished by a Halley step, and the bivariate CDF
//! through a fixed-order Gauss–Legendre quadrature of the one-dimensional
//! integral representation over `asin(ρ)`, switching to the complementary
//! reduction when `|ρ| > 0.925`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::cached_rule;

/// `1 / sqrt(2π)`
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// A correlation coefficient strictly inside `(-1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Correlation(f64);

impl Correlation {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value.abs() < 1.0 {
            Ok(Self(value))
        } else {
            Err(Error::domain(format!("correlation must lie in (-1, 1), got {value}")))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Correlation {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Correlation> for f64 {
    fn from(c: Correlation) -> f64 {
        c.0
    }
}

impl std::fmt::Display for Correlation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn finite(x: f64, what: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::domain(format!("{what} must be finite, got {x}")))
    }
}

/// Standard normal CDF `Φ(x)`.
pub fn std_normal_cdf(x: f64) -> Result<f64> {
    Ok(norm_cdf(finite(x, "x")?))
}

/// Standard normal density `φ(x)`.
pub fn std_normal_pdf(x: f64) -> Result<f64> {
    Ok(norm_pdf(finite(x, "x")?))
}

/// Standard normal quantile `Φ⁻¹(p)` for `p ∈ (0, 1)`.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if p > 0.0 && p < 1.0 {
        Ok(norm_quantile(p))
    } else {
        Err(Error::domain(format!("normal quantile needs p in (0, 1), got {p}")))
    }
}

/// Bivariate standard normal CDF `Φ_ρ(x, y)`. Infinite arguments are allowed.
pub fn bivariate_normal_cdf(x: f64, y: f64, rho: Correlation) -> Result<f64> {
    if x.is_nan() || y.is_nan() {
        return Err(Error::domain("bivariate normal CDF argument is NaN"));
    }
    Ok(bvn_cdf(x, y, rho.value()))
}

/// Bivariate standard normal density `φ_ρ(x, y)`.
pub fn bivariate_normal_pdf(x: f64, y: f64, rho: Correlation) -> Result<f64> {
    finite(x, "x")?;
    finite(y, "y")?;
    Ok(bvn_pdf(x, y, rho.value()))
}

// ---------------------------------------------------------------------------
// Unchecked kernels used on hot paths.
// ---------------------------------------------------------------------------

/// Standard normal CDF `Φ`.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density `φ`.
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// `Φ⁻¹(p)` for `p ∈ (0, 1)`; the caller guarantees the range.
pub(crate) fn norm_quantile(p: f64) -> f64 {
    if p > 0.5 {
        // 1 - p is exact here
        return -lower_quantile(1.0 - p);
    }
    lower_quantile(p)
}

/// `Φ⁻¹(p)` for `0 < p ≤ 1/2`: rational start, one Halley step.
#[inline]
pub(crate) fn lower_quantile(p: f64) -> f64 {
    let x = acklam(p);
    let d = norm_pdf(x);
    if d == 0.0 {
        return x;
    }
    let e = (norm_cdf(x) - p) / d;
    x - e / (1.0 + 0.5 * x * e)
}

/// Acklam's rational approximation (relative error below 1.2e-9).
fn acklam(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
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
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

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

#[inline]
pub(crate) fn bvn_pdf(x: f64, y: f64, rho: f64) -> f64 {
    let om = 1.0 - rho * rho;
    let q = (x * x - 2.0 * rho * x * y + y * y) / om;
    (-0.5 * q).exp() / (2.0 * PI * om.sqrt())
}

/// Log of the Gaussian copula density at normal scores `(z1, z2)`, i.e.
/// `ln φ_ρ(z1, z2) - ln φ(z1) - ln φ(z2)`. Symmetric in its arguments bit for bit.
#[inline]
pub(crate) fn ln_gauss_copula_density(z1: f64, z2: f64, rho: f64) -> f64 {
    let om = 1.0 - rho * rho;
    let ss = z1 * z1 + z2 * z2;
    -0.5 * om.ln() - (rho * rho * ss - 2.0 * rho * (z1 * z2)) / (2.0 * om)
}

/// `P(X ≤ x, Y ≤ y)` for a standard bivariate normal with correlation `rho`.
pub(crate) fn bvn_cdf(x: f64, y: f64, rho: f64) -> f64 {
    if x == f64::NEG_INFINITY || y == f64::NEG_INFINITY {
        return 0.0;
    }
    if x == f64::INFINITY {
        return norm_cdf(y);
    }
    if y == f64::INFINITY {
        return norm_cdf(x);
    }
    // a fixed argument order keeps the result exactly symmetric
    let (a, b) = if x <= y { (x, y) } else { (y, x) };
    bvn_upper(-a, -b, rho)
}

/// `P(X > h, Y > k)`, finite `h`, `k`.
fn bvn_upper(h: f64, k: f64, r: f64) -> f64 {
    if r == 0.0 {
        return norm_cdf(-h) * norm_cdf(-k);
    }
    let two_pi = 2.0 * PI;
    let ar = r.abs();
    let order = if ar < 0.3 {
        6
    } else if ar < 0.75 {
        12
    } else {
        20
    };
    let rule = cached_rule(order);
    // positive half of the symmetric rule; each node is used as 1 - x and 1 + x
    let half = order / 2;
    let xs = &rule.nodes()[order - half..];
    let ws = &rule.weights()[order - half..];

    let mut hk = h * k;
    let mut bvn = 0.0;
    if ar < 0.925 {
        let hs = 0.5 * (h * h + k * k);
        let asr = 0.5 * r.asin();
        for (x, w) in xs.iter().zip(ws) {
            for node in [1.0 - x, 1.0 + x] {
                let sn = (asr * node).sin();
                bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
            }
        }
        bvn = bvn * asr / two_pi + norm_cdf(-h) * norm_cdf(-k);
    } else {
        let mut k = k;
        if r < 0.0 {
            k = -k;
            hk = -hk;
        }
        if ar < 1.0 {
            let a_s = (1.0 - r) * (1.0 + r);
            let mut a = a_s.sqrt();
            let bs = (h - k) * (h - k);
            let c = (4.0 - hk) / 8.0;
            let d = (12.0 - hk) / 80.0;
            let asr = -0.5 * (bs / a_s + hk);
            if asr > -100.0 {
                bvn = a * asr.exp() * (1.0 - c * (bs - a_s) * (1.0 - d * bs) / 3.0 + c * d * a_s * a_s);
            }
            if hk > -100.0 {
                let b = bs.sqrt();
                let sp = two_pi.sqrt() * norm_cdf(-b / a);
                bvn -= (-0.5 * hk).exp() * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
            }
            a *= 0.5;
            let mut sum = 0.0;
            for (x, w) in xs.iter().zip(ws) {
                for node in [1.0 - x, 1.0 + x] {
                    let xs2 = (a * node) * (a * node);
                    let asr = -0.5 * (bs / xs2 + hk);
                    if asr > -100.0 {
                        let sp = 1.0 + c * xs2 * (1.0 + 5.0 * d * xs2);
                        let rs = (1.0 - xs2).sqrt();
                        let ep = (-hk * xs2 / (2.0 * (1.0 + rs) * (1.0 + rs))).exp() / rs;
                        sum += w * asr.exp() * (sp - ep);
                    }
                }
            }
            bvn = (a * sum - bvn) / two_pi;
        }
        if r > 0.0 {
            bvn += norm_cdf(-h.max(k));
        } else if h >= k {
            bvn = -bvn;
        } else {
            let l = if h < 0.0 {
                norm_cdf(k) - norm_cdf(h)
            } else {
                norm_cdf(-h) - norm_cdf(-k)
            };
            bvn = l - bvn;
        }
    }
    bvn.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::GaussLegendre;

    fn rho(v: f64) -> Correlation {
        Correlation::new(v).unwrap()
    }

    /// Φ(x) as ∫_{-∞}^x φ, by composite Gauss–Legendre on [x - 40, x].
    fn cdf_by_quadrature(x: f64) -> f64 {
        GaussLegendre::new(30).integrate_composite(x - 40.0, x, 80, norm_pdf)
    }

    /// Lower-tail asymptotic series φ(x)/|x| Σ (-1)^k (2k-1)!! / x^{2k}.
    fn mills_series(x: f64) -> f64 {
        let x2 = x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..12 {
            term *= -((2 * k - 1) as f64) / x2;
            sum += term;
        }
        norm_pdf(x) / x.abs() * sum
    }

    /// Φ_ρ(x, y) = ∫_{-∞}^x φ(s) Φ((y - ρ s)/√(1-ρ²)) ds, independent of the Genz reduction.
    fn bvn_by_quadrature(x: f64, y: f64, r: f64) -> f64 {
        let s = (1.0 - r * r).sqrt();
        GaussLegendre::new(30).integrate_composite((-40.0_f64).min(x - 1.0), x, 800, |t| {
            norm_pdf(t) * norm_cdf((y - r * t) / s)
        })
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(std_normal_cdf(0.0).unwrap(), 0.5);
        assert!((std_normal_cdf(1.959_963_985).unwrap() - 0.975).abs() < 1e-10);
        let tail = std_normal_cdf(-8.0).unwrap();
        let oracle = mills_series(-8.0);
        assert!(((tail - oracle) / oracle).abs() < 1e-10, "{tail} vs {oracle}");
        assert!((tail - 6.22096e-16).abs() / 6.22096e-16 < 1e-5);
        assert!(std_normal_cdf(f64::NAN).is_err());
        assert!(std_normal_cdf(f64::INFINITY).is_err());
    }

    #[test]
    fn cdf_matches_quadrature_oracle() {
        for &x in &[-6.0, -3.3, -1.0, -0.2, 0.0, 0.7, 1.959_963_985, 4.0] {
            let a = std_normal_cdf(x).unwrap();
            let b = cdf_by_quadrature(x);
            assert!((a - b).abs() <= 1e-14 * b, "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn cdf_symmetry() {
        for i in -60..=60 {
            let x = i as f64 * 0.1;
            let lhs = norm_cdf(-x);
            let rhs = 1.0 - norm_cdf(x);
            assert!((lhs - rhs).abs() < 1e-15);
        }
    }

    /// Root of Φ(x) = p by bisection, the oracle for the quantile examples.
    fn bisect_quantile(p: f64) -> f64 {
        let (mut lo, mut hi) = (-40.0, 40.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if norm_cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
        let q = std_normal_quantile(0.975).unwrap();
        assert!((q - 1.959_963_985).abs() < 1e-9);
        assert!((q - bisect_quantile(0.975)).abs() < 1e-12);
        let q = std_normal_quantile(1e-10).unwrap();
        assert!((q - (-6.3613)).abs() < 1e-4);
        assert!((q - bisect_quantile(1e-10)).abs() < 1e-10);
        for bad in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(std_normal_quantile(bad).is_err());
        }
    }

    #[test]
    fn quantile_roundtrip_grid() {
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=2000 {
            let t = k as f64 / 2000.0;
            // log-spaced from 1e-12 up to 1/2, mirrored above
            let p = if t < 0.5 {
                10f64.powf(-12.0 + t * 2.0 * (12.0 - 0.301))
            } else {
                1.0 - 10f64.powf(-12.0 + (1.0 - t) * 2.0 * (12.0 - 0.301))
            };
            let x = std_normal_quantile(p).unwrap();
            assert!((norm_cdf(x) - p).abs() <= 1e-12, "p={p}");
            assert!(x >= prev);
            prev = x;
        }
    }

    #[test]
    fn pdf_examples() {
        assert!((std_normal_pdf(0.0).unwrap() - 0.398_942_280_4).abs() < 1e-10);
        assert!((std_normal_pdf(1.0).unwrap() - 0.241_970_724_5).abs() < 1e-10);
        assert_eq!(std_normal_pdf(-1.0).unwrap(), std_normal_pdf(1.0).unwrap());
    }

    #[test]
    fn bivariate_cdf_examples() {
        let v = bivariate_normal_cdf(0.0, 0.0, rho(0.0)).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
        let v = bivariate_normal_cdf(0.0, 0.0, rho(0.5)).unwrap();
        let exact = 0.25 + 0.5_f64.asin() / (2.0 * PI);
        assert!((v - exact).abs() < 1e-14);
        assert!((v - 0.333_333_3).abs() < 1e-7);
        for r in [-0.95, -0.3, 0.0, 0.6, 0.99] {
            let v = bivariate_normal_cdf(f64::INFINITY, 0.7, rho(r)).unwrap();
            assert_eq!(v, norm_cdf(0.7));
            assert_eq!(bivariate_normal_cdf(f64::NEG_INFINITY, 0.7, rho(r)).unwrap(), 0.0);
        }
    }

    #[test]
    fn bivariate_cdf_matches_single_integral_oracle() {
        let pts = [-3.0, -1.5, -0.4, 0.0, 0.8, 2.1];
        for r in [-0.99, -0.93, -0.8, -0.5, -0.1, 0.2, 0.5, 0.74, 0.9, 0.93, 0.99, 0.999] {
            for &x in &pts {
                for &y in &pts {
                    let a = bvn_cdf(x, y, r);
                    let b = bvn_by_quadrature(x, y, r);
                    assert!((a - b).abs() < 1e-12, "({x},{y},{r}): {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn bivariate_cdf_limits() {
        for &x in &[-2.0, 0.0, 1.3] {
            for &y in &[-1.0, 0.5, 2.0] {
                let v = bvn_cdf(x, y, 0.999_999);
                assert!((v - norm_cdf(x.min(y))).abs() < 1e-3);
                assert!((bvn_cdf(x, y, 0.0) - norm_cdf(x) * norm_cdf(y)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bivariate_pdf_examples() {
        let v = bivariate_normal_pdf(0.0, 0.0, rho(0.0)).unwrap();
        assert!((v - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!((v - 0.159_154_9).abs() < 1e-7);
        let v = bivariate_normal_pdf(0.0, 0.0, rho(0.5)).unwrap();
        assert!((v - 0.183_776_2).abs() < 1e-7);
        let v = bivariate_normal_pdf(1.0, -1.0, rho(0.0)).unwrap();
        assert!((v - 0.058_549_8).abs() < 1e-7);
    }

    #[test]
    fn bivariate_pdf_integrates_to_one() {
        let gl = GaussLegendre::new(40);
        for r in [-0.9, 0.0, 0.5, 0.9] {
            let total = gl.integrate_composite(-9.0, 9.0, 6, |x| {
                gl.integrate_composite(-9.0, 9.0, 6, |y| bvn_pdf(x, y, r))
            });
            assert!((total - 1.0).abs() < 1e-6, "rho={r}: {total}");
        }
    }

    #[test]
    fn mixed_difference_of_cdf_is_pdf() {
        let h = 1e-3;
        for r in [-0.9, -0.5, 0.0, 0.5, 0.9] {
            for x in -2..=2 {
                for y in -2..=2 {
                    let (x, y) = (x as f64, y as f64);
                    let fd = (bvn_cdf(x + h, y + h, r) - bvn_cdf(x + h, y - h, r) - bvn_cdf(x - h, y + h, r)
                        + bvn_cdf(x - h, y - h, r))
                        / (4.0 * h * h);
                    let pdf = bvn_pdf(x, y, r);
                    assert!((fd - pdf).abs() < 1e-6, "({x},{y},{r}): {fd} vs {pdf}");
                }
            }
        }
    }

    #[test]
    fn correlation_rejects_boundary() {
        assert!(Correlation::new(1.0).is_err());
        assert!(Correlation::new(-1.0).is_err());
        assert!(Correlation::new(f64::NAN).is_err());
        assert!(Correlation::new(0.999).is_ok());
    }

    #[test]
    fn gauss_copula_log_density_matches_ratio() {
        for &(a, b, r) in &[(0.3, -1.2, 0.5), (2.0, 1.0, -0.7), (0.0, 0.0, 0.5)] {
            let direct = (bvn_pdf(a, b, r) / (norm_pdf(a) * norm_pdf(b))).ln();
            assert!((ln_gauss_copula_density(a, b, r) - direct).abs() < 1e-13);
        }
        assert!((ln_gauss_copula_density(0.0, 0.0, 0.5) - 0.143_841_036).abs() < 1e-8);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn bvn_symmetric(x in -6.0..6.0f64, y in -6.0..6.0f64, r in -0.999..0.999f64) {
                prop_assert_eq!(bvn_cdf(x, y, r), bvn_cdf(y, x, r));
            }

            #[test]
            fn bvn_independent_product(x in -6.0..6.0f64, y in -6.0..6.0f64) {
                prop_assert!((bvn_cdf(x, y, 0.0) - norm_cdf(x) * norm_cdf(y)).abs() < 1e-12);
            }

            #[test]
            fn quantile_inverts_cdf(p in 1e-12..(1.0 - 1e-12)) {
                let x = norm_quantile(p);
                prop_assert!((norm_cdf(x) - p).abs() <= 1e-12);
            }
        }
    }
}
