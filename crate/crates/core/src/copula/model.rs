use crate::dist::{AsymLaplace, ModelMargin};
use crate::quad::cached_rule;
use crate::special_fn::{bvn_cdf, ln_gauss_copula_density, lower_quantile, norm_cdf};

use super::params::{ModelParams, QuadRule, QuadratureSpec};
use super::ztable::{lower_score, LN_MIN_PROB};
use super::BivariateCopula;

const LN_HALF: f64 = -std::f64::consts::LN_2;

/// The model copula with its margin, shock law and integration rule fixed.
///
/// The `joint_*` methods work on the `X` scale; the [`BivariateCopula`]
/// methods map uniforms through the margin quantile first.
///
/// ```
/// use asymtail::copula::{BivariateCopula, ModelCopula, ModelParams, QuadratureSpec};
/// let p = ModelParams::new(0.7, 0.2, 0.5).unwrap();
/// let c = ModelCopula::new(p, QuadratureSpec::fast());
/// let v = c.cdf(0.3, 0.6);
/// assert!(v > 0.3 * 0.6 && v < 0.3);
/// ```
#[derive(Debug, Clone)]
pub struct ModelCopula {
    params: ModelParams,
    quad: QuadratureSpec,
    margin: ModelMargin,
    rho: f64,
    /// `√(1 − ρ²)`
    rho_c: f64,
    r_lo: f64,
    r_hi: f64,
    inv_dl: f64,
    inv_du: f64,
    ln_r_norm: f64,
    // W ~ AL(a, b)
    inv_a: f64,
    inv_b: f64,
    ln_w_norm: f64,
    ln_w_lower: f64,
    ln_w_upper: f64,
}

/// Normal score and log-density of `W` at one point.
#[derive(Clone, Copy)]
struct Score {
    z: f64,
    ln_f: f64,
}

impl ModelCopula {
    pub fn new(params: ModelParams, quad: QuadratureSpec) -> Self {
        let margin = ModelMargin::from_params(&params);
        let r: AsymLaplace = margin.shock();
        let w = margin.noise();
        let eps = quad.tail_mass_cut();
        let (dl, du) = (params.delta_l(), params.delta_u());
        let (a, b) = (w.delta_l(), w.delta_u());
        let rho = params.rho();
        if matches!(quad.rule(), QuadRule::Mapped { .. }) {
            super::ztable::warm();
        }
        Self {
            params,
            quad,
            margin,
            rho,
            rho_c: (1.0 - rho * rho).sqrt(),
            r_lo: r.quantile_unchecked(eps),
            r_hi: r.quantile_unchecked(1.0 - eps),
            inv_dl: 1.0 / dl,
            inv_du: 1.0 / du,
            ln_r_norm: (dl + du).ln(),
            inv_a: 1.0 / a,
            inv_b: 1.0 / b,
            ln_w_norm: (a + b).ln(),
            ln_w_lower: (a / (a + b)).ln(),
            ln_w_upper: (b / (a + b)).ln(),
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn margin(&self) -> &ModelMargin {
        &self.margin
    }

    pub fn quadrature(&self) -> &QuadratureSpec {
        &self.quad
    }

    /// Truncated integration range for the shock.
    pub fn shock_range(&self) -> (f64, f64) {
        (self.r_lo, self.r_hi)
    }

    /// `F_X^{-1}(u)`; NaN if the root finder fails.
    #[inline]
    pub fn to_x(&self, u: f64) -> f64 {
        self.margin.quantile(u).unwrap_or(f64::NAN)
    }

    #[inline]
    fn ln_f_r(&self, r: f64) -> f64 {
        let s = if r <= 0.0 { r * self.inv_dl } else { -r * self.inv_du };
        s - self.ln_r_norm
    }

    #[inline]
    fn slope_f_r(&self, r: f64) -> f64 {
        if r <= 0.0 {
            self.inv_dl
        } else {
            -self.inv_du
        }
    }

    /// Slope in `r` of `ln f_W(x − r)`.
    #[inline]
    fn slope_f_w(&self, y: f64) -> f64 {
        if y <= 0.0 {
            -self.inv_a
        } else {
            self.inv_b
        }
    }

    /// Slope in `r` of the exponential part of `ln F_W(x − r)`.
    #[inline]
    fn slope_cdf_w(&self, y: f64) -> f64 {
        if y <= 0.0 {
            -self.inv_a
        } else {
            0.0
        }
    }

    /// `Φ⁻¹(F_W(y))` with `F_W` clamped to `[1e-300, 1 − 1e-300]`, and `ln f_W(y)`.
    #[inline]
    fn score(&self, y: f64) -> Score {
        let tabled = matches!(self.quad.rule(), QuadRule::Mapped { .. });
        let lower = |l: f64| {
            if tabled {
                lower_score(l)
            } else {
                lower_quantile(l.max(LN_MIN_PROB).exp())
            }
        };
        if y <= 0.0 {
            let ln_cdf = self.ln_w_lower + y * self.inv_a;
            let z = if ln_cdf <= LN_HALF {
                lower(ln_cdf)
            } else {
                -lower((-ln_cdf.exp()).ln_1p())
            };
            Score {
                z,
                ln_f: y * self.inv_a - self.ln_w_norm,
            }
        } else {
            let ln_sf = self.ln_w_upper - y * self.inv_b;
            let z = if ln_sf <= LN_HALF {
                -lower(ln_sf)
            } else {
                lower((-ln_sf.exp()).ln_1p())
            };
            Score {
                z,
                ln_f: -y * self.inv_b - self.ln_w_norm,
            }
        }
    }

    /// Integrates `f` over the truncated shock range, split at `0`, `x1`, `x2`.
    /// `slope(r)` is the slope of the dominant log-linear part of the integrand
    /// on the segment containing `r`.
    fn integrate<S, F>(&self, x1: f64, x2: f64, slope: S, f: F) -> f64
    where
        S: Fn(f64) -> f64,
        F: Fn(f64) -> f64,
    {
        let (lo, hi) = (self.r_lo, self.r_hi);
        let mut k = [0.0, x1, x2];
        k.sort_by(|a, b| a.total_cmp(b));
        let edges = [lo, k[0].clamp(lo, hi), k[1].clamp(lo, hi), k[2].clamp(lo, hi), hi];
        let mut total = 0.0;
        for seg in edges.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            if b <= a {
                continue;
            }
            total += match self.quad.rule() {
                QuadRule::Simpson => crate::quad::simpson(a, b, self.quad.subintervals(), &f),
                QuadRule::Mapped { panels, order } => mapped_segment(a, b, slope(0.5 * (a + b)), panels, order, &f),
            };
        }
        total
    }

    /// Joint CDF `F_X(x1, x2)`.
    pub fn joint_cdf(&self, x1: f64, x2: f64) -> f64 {
        let xm = x1.min(x2);
        let v = self.integrate(
            x1,
            x2,
            |r| self.slope_f_r(r) + self.slope_cdf_w(xm - r),
            |r| {
                let s1 = self.score(x1 - r);
                let s2 = self.score(x2 - r);
                bvn_cdf(s1.z, s2.z, self.rho) * self.ln_f_r(r).exp()
            },
        );
        v.clamp(0.0, 1.0)
    }

    /// Joint density `f_X(x1, x2)`.
    pub fn joint_pdf(&self, x1: f64, x2: f64) -> f64 {
        self.integrate(
            x1,
            x2,
            |r| self.slope_f_r(r) + (self.slope_f_w(x1 - r) + self.slope_f_w(x2 - r)),
            |r| {
                let s1 = self.score(x1 - r);
                let s2 = self.score(x2 - r);
                let lc = ln_gauss_copula_density(s1.z, s2.z, self.rho);
                (lc + (s1.ln_f + s2.ln_f) + self.ln_f_r(r)).exp()
            },
        )
    }

    /// `∂F_X/∂x1` at `(x1, x2)`; swap the arguments for `∂F_X/∂x2`.
    pub fn joint_partial1(&self, x1: f64, x2: f64) -> f64 {
        self.integrate(
            x1,
            x2,
            |r| self.slope_f_r(r) + self.slope_f_w(x1 - r) + self.slope_cdf_w(x2 - r),
            |r| {
                let s1 = self.score(x1 - r);
                let s2 = self.score(x2 - r);
                let h = norm_cdf((s2.z - self.rho * s1.z) / self.rho_c);
                h * (s1.ln_f + self.ln_f_r(r)).exp()
            },
        )
    }

    /// `log c` at margin-scale points `x1 = F_X^{-1}(u1)`, `x2 = F_X^{-1}(u2)`.
    pub fn ln_pdf_x(&self, x1: f64, x2: f64) -> f64 {
        let m = &self.margin;
        self.joint_pdf(x1, x2).ln() - (m.pdf(x1).ln() + m.pdf(x2).ln())
    }

    /// `∂C/∂u1` at margin-scale points.
    pub fn partial1_x(&self, x1: f64, x2: f64) -> f64 {
        (self.joint_partial1(x1, x2) / self.margin.pdf(x1)).clamp(0.0, 1.0)
    }
}

/// The mapped rule follows `e^{−|s| t / MAP_SOFTEN}` rather than the full
/// slope, so the transformed integrand stays smooth when the true decay differs.
const MAP_SOFTEN: f64 = 5.0;

/// One segment of the mapped rule.
///
/// With `c = |s| / MAP_SOFTEN`, the substitution `t = −ln(1 − v q)/c`,
/// `q = 1 − e^{−c L}`, turns the weight `e^{−c t}` on `[0, L]` into a constant
/// on `v ∈ [0, 1]`. `t` is measured from the end where the weight is largest.
fn mapped_segment<F: Fn(f64) -> f64>(a: f64, b: f64, s: f64, panels: usize, order: usize, f: &F) -> f64 {
    let rule = cached_rule(order);
    let len = b - a;
    let c = s.abs() / MAP_SOFTEN;
    if c * len < 1e-6 {
        let h = len / panels as f64;
        let mut acc = 0.0;
        for j in 0..panels {
            let lo = a + h * j as f64;
            acc += rule.integrate(lo, lo + h, f);
        }
        return acc;
    }
    let q = -(-c * len).exp_m1();
    let h = 1.0 / panels as f64;
    let mut acc = 0.0;
    for j in 0..panels {
        let mid = h * (j as f64 + 0.5);
        let half = 0.5 * h;
        let mut part = 0.0;
        for (xi, w) in rule.nodes().iter().zip(rule.weights()) {
            let v = mid + half * xi;
            let one_minus = 1.0 - v * q;
            let t = -(-v * q).ln_1p() / c;
            let jac = q / (c * one_minus);
            let r = if s < 0.0 { a + t } else { b - t };
            part += w * f(r) * jac;
        }
        acc += part * half;
    }
    acc
}

impl BivariateCopula for ModelCopula {
    fn cdf(&self, u1: f64, u2: f64) -> f64 {
        self.joint_cdf(self.to_x(u1), self.to_x(u2)).min(u1.min(u2))
    }

    fn ln_pdf(&self, u1: f64, u2: f64) -> f64 {
        self.ln_pdf_x(self.to_x(u1), self.to_x(u2))
    }

    fn partial1(&self, u1: f64, u2: f64) -> f64 {
        self.partial1_x(self.to_x(u1), self.to_x(u2))
    }
}
