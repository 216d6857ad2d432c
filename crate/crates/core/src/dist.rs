//! Asymmetric Laplace distributions and the closed-form margin of `X = R + W`.
//!
//! `R ~ AL(δ_L, δ_U)` carries the common shock and each `W_i ~ AL(1 − δ_L, 1 − δ_U)`.
//! The margin of `X_i` is a mixture of four exponentials whose coefficients are
//! computed once per [`ModelMargin`]. When a scale sits at 1/2 the two exponentials
//! on that side coincide and the generic coefficients blow up, so that side switches
//! to its confluent `(A x + B) e^{±2x}` form.

use serde::{Deserialize, Serialize};

use crate::copula::ModelParams;
use crate::error::{Error, Result};

/// Width of the band around 1/2 inside which the confluent margin formulas are used.
pub const HALF_BAND: f64 = 1e-8;

fn check_scale(value: f64, name: &str) -> Result<f64> {
    if value.is_finite() && value > 0.0 && value < 1.0 {
        Ok(value)
    } else {
        Err(Error::domain(format!("{name} must lie in (0, 1), got {value}")))
    }
}

/// Asymmetric Laplace law with lower scale `delta_l` and upper scale `delta_u`.
///
/// ```
/// use asymtail::dist::AsymLaplace;
/// let d = AsymLaplace::new(0.7, 0.2).unwrap();
/// assert!((d.cdf(0.0) - 0.7 / 0.9).abs() < 1e-15);
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymLaplace {
    delta_l: f64,
    delta_u: f64,
}

impl AsymLaplace {
    pub fn new(delta_l: f64, delta_u: f64) -> Result<Self> {
        Ok(Self {
            delta_l: check_scale(delta_l, "delta_l")?,
            delta_u: check_scale(delta_u, "delta_u")?,
        })
    }

    /// The law of `W`: scales `(1 − δ_L, 1 − δ_U)`.
    pub fn complement(self) -> Self {
        Self {
            delta_l: 1.0 - self.delta_l,
            delta_u: 1.0 - self.delta_u,
        }
    }

    #[inline]
    pub fn delta_l(&self) -> f64 {
        self.delta_l
    }

    #[inline]
    pub fn delta_u(&self) -> f64 {
        self.delta_u
    }

    /// Probability mass below zero, `δ_L / (δ_L + δ_U)`.
    #[inline]
    pub fn mass_below_zero(&self) -> f64 {
        self.delta_l / (self.delta_l + self.delta_u)
    }

    #[inline]
    pub fn cdf(&self, r: f64) -> f64 {
        let (a, b) = (self.delta_l, self.delta_u);
        if r <= 0.0 {
            a / (a + b) * (r / a).exp()
        } else {
            1.0 - b / (a + b) * (-r / b).exp()
        }
    }

    /// Survival function `1 − F(r)`, accurate in the upper tail.
    #[inline]
    pub fn sf(&self, r: f64) -> f64 {
        let (a, b) = (self.delta_l, self.delta_u);
        if r <= 0.0 {
            1.0 - a / (a + b) * (r / a).exp()
        } else {
            b / (a + b) * (-r / b).exp()
        }
    }

    #[inline]
    pub fn pdf(&self, r: f64) -> f64 {
        self.ln_pdf(r).exp()
    }

    #[inline]
    pub fn ln_pdf(&self, r: f64) -> f64 {
        let (a, b) = (self.delta_l, self.delta_u);
        let scaled = if r <= 0.0 { r / a } else { -r / b };
        scaled - (a + b).ln()
    }

    /// Inverse CDF for `p ∈ (0, 1)`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if p > 0.0 && p < 1.0 {
            Ok(self.quantile_unchecked(p))
        } else {
            Err(Error::domain(format!("AL quantile needs p in (0, 1), got {p}")))
        }
    }

    #[inline]
    pub(crate) fn quantile_unchecked(&self, p: f64) -> f64 {
        let (a, b) = (self.delta_l, self.delta_u);
        if p <= a / (a + b) {
            a * (p * (a + b) / a).ln()
        } else {
            -b * ((1.0 - p) * (a + b) / b).ln()
        }
    }

    /// Quantile at `p` given both `p` and `q = 1 − p` to full precision.
    #[inline]
    pub(crate) fn quantile_from_tails(&self, p: f64, q: f64) -> f64 {
        let (a, b) = (self.delta_l, self.delta_u);
        if p <= a / (a + b) {
            a * (p * (a + b) / a).ln()
        } else {
            -b * (q * (a + b) / b).ln()
        }
    }

    /// `E[exp(tW)]`, finite for `−1/δ_L < t < 1/δ_U`.
    pub fn exp_moment(&self, t: f64) -> Result<f64> {
        let (a, b) = (self.delta_l, self.delta_u);
        let (lo, hi) = (-1.0 / a, 1.0 / b);
        if !(t > lo && t < hi) {
            return Err(Error::DivergentMoment { t, lo, hi });
        }
        Ok(a / ((a + b) * (1.0 + t * a)) + b / ((a + b) * (1.0 - t * b)))
    }
}

pub fn al_cdf(d: &AsymLaplace, r: f64) -> Result<f64> {
    finite(r)?;
    Ok(d.cdf(r))
}

pub fn al_pdf(d: &AsymLaplace, r: f64) -> Result<f64> {
    finite(r)?;
    Ok(d.pdf(r))
}

pub fn al_quantile(d: &AsymLaplace, p: f64) -> Result<f64> {
    d.quantile(p)
}

pub fn al_exp_moment(d: &AsymLaplace, t: f64) -> Result<f64> {
    d.exp_moment(t)
}

fn finite(x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::domain(format!("argument must be finite, got {x}")))
    }
}

/// Which of the margin formulas are in force.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarginRegime {
    Generic,
    HalfLower,
    HalfUpper,
    BothHalf,
}

/// One side of the margin.
///
/// Lower side (`x ≤ 0`) represents `F(x)`, upper side (`x > 0`) represents
/// `1 − F(x)`, both in the reflected variable `s = |x|`:
/// `Two { c1, r1, c2, r2 }` is `c1 e^{−s/r1} − c2 e^{−s/r2}` and
/// `Confluent { a, b }` is `(a s + b) e^{−2s}`.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Side {
    Two { c1: f64, r1: f64, c2: f64, r2: f64 },
    Confluent { a: f64, b: f64 },
}

impl Side {
    /// Build one side. `d` is the scale on this side, `e` the scale on the other.
    fn new(d: f64, e: f64) -> Self {
        if (d - 0.5).abs() < HALF_BAND {
            let a = 2.0 / ((1.0 + 2.0 * e) * (3.0 - 2.0 * e));
            let den = (1.0 + 2.0 * e) * (3.0 - 2.0 * e);
            let b = -(12.0 * e * e - 12.0 * e - 5.0) / (den * den);
            Side::Confluent { a, b }
        } else {
            let c1 = d.powi(3) / ((d + e) * (2.0 * d - 1.0) * (1.0 + d - e));
            let c2 = (d - 1.0).powi(3) / ((2.0 * d - 1.0) * (d - e - 1.0) * (2.0 - d - e));
            Side::Two {
                c1,
                r1: d,
                c2,
                r2: 1.0 - d,
            }
        }
    }

    /// Tail mass at distance `s ≥ 0` beyond the origin.
    #[inline]
    fn mass(&self, s: f64) -> f64 {
        match *self {
            Side::Two { c1, r1, c2, r2 } => c1 * (-s / r1).exp() - c2 * (-s / r2).exp(),
            Side::Confluent { a, b } => (a * s + b) * (-2.0 * s).exp(),
        }
    }

    /// Derivative of [`Side::mass`] with respect to `−s`, i.e. the density.
    #[inline]
    fn density(&self, s: f64) -> f64 {
        match *self {
            Side::Two { c1, r1, c2, r2 } => c1 / r1 * (-s / r1).exp() - c2 / r2 * (-s / r2).exp(),
            Side::Confluent { a, b } => (2.0 * (a * s + b) - a) * (-2.0 * s).exp(),
        }
    }

    fn is_confluent(&self) -> bool {
        matches!(self, Side::Confluent { .. })
    }
}

/// Closed-form margin `F_X` of the model.
///
/// ```
/// use asymtail::dist::ModelMargin;
/// let m = ModelMargin::new(0.5, 0.5).unwrap();
/// assert!((m.cdf(0.0) - 0.5).abs() < 1e-15);
/// let x = m.quantile(0.9).unwrap();
/// assert!((m.cdf(x) - 0.9).abs() < 1e-12);
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelMargin {
    r: AsymLaplace,
    lower: Side,
    upper: Side,
}

impl ModelMargin {
    pub fn new(delta_l: f64, delta_u: f64) -> Result<Self> {
        let r = AsymLaplace::new(delta_l, delta_u)?;
        Ok(Self {
            r,
            lower: Side::new(delta_l, delta_u),
            upper: Side::new(delta_u, delta_l),
        })
    }

    pub fn from_params(p: &ModelParams) -> Self {
        Self::new(p.delta_l(), p.delta_u()).expect("ModelParams holds valid scales")
    }

    pub fn delta_l(&self) -> f64 {
        self.r.delta_l
    }

    pub fn delta_u(&self) -> f64 {
        self.r.delta_u
    }

    pub fn regime(&self) -> MarginRegime {
        match (self.lower.is_confluent(), self.upper.is_confluent()) {
            (false, false) => MarginRegime::Generic,
            (true, false) => MarginRegime::HalfLower,
            (false, true) => MarginRegime::HalfUpper,
            (true, true) => MarginRegime::BothHalf,
        }
    }

    /// Law of the common shock `R`.
    pub fn shock(&self) -> AsymLaplace {
        self.r
    }

    /// Law of each idiosyncratic term `W_i`.
    pub fn noise(&self) -> AsymLaplace {
        self.r.complement()
    }

    #[inline]
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            self.lower.mass(-x)
        } else {
            1.0 - self.upper.mass(x)
        }
    }

    /// `1 − F_X(x)` without cancellation in the upper tail.
    #[inline]
    pub fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            1.0 - self.lower.mass(-x)
        } else {
            self.upper.mass(x)
        }
    }

    #[inline]
    pub fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            self.lower.density(-x)
        } else {
            self.upper.density(x)
        }
    }

    /// Inverse of [`ModelMargin::cdf`] for `p ∈ (0, 1)`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain(format!("margin quantile needs p in (0, 1), got {p}")));
        }
        self.solve(p)
    }

    /// Bisection to a width of 1e-3, then Newton steps kept inside the bracket.
    fn solve(&self, p: f64) -> Result<f64> {
        // work on the side of the distribution where p is representable
        let upper = p > 0.5;
        let target = if upper { 1.0 - p } else { p };
        // g is increasing in x
        let g = |x: f64| {
            if upper {
                target - self.sf(x)
            } else {
                self.cdf(x) - target
            }
        };

        let w = self.noise();
        let mid = self.r.quantile_unchecked(p) + w.quantile_unchecked(p);
        let (mut lo, mut hi) = (mid - 2.0, mid + 2.0);
        let mut step = 2.0;
        while g(lo) > 0.0 {
            step *= 2.0;
            lo = mid - step;
            if step > 1e4 {
                return Err(Error::Numeric(format!("no lower bracket for p = {p}")));
            }
        }
        step = 2.0;
        while g(hi) < 0.0 {
            step *= 2.0;
            hi = mid + step;
            if step > 1e4 {
                return Err(Error::Numeric(format!("no upper bracket for p = {p}")));
            }
        }

        while hi - lo > 1e-3 {
            let m = 0.5 * (lo + hi);
            if g(m) < 0.0 {
                lo = m;
            } else {
                hi = m;
            }
        }

        let mut x = 0.5 * (lo + hi);
        for _ in 0..100 {
            let gx = g(x);
            if gx == 0.0 {
                return Ok(x);
            }
            if gx < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let d = self.pdf(x);
            let mut next = x - gx / d;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) || hi - lo <= 1e-15 * (1.0 + x.abs()) {
                return Ok(next);
            }
            x = next;
        }
        Err(Error::Numeric(format!("margin quantile did not converge for p = {p}")))
    }
}

pub fn margin_cdf(m: &ModelMargin, x: f64) -> Result<f64> {
    finite(x)?;
    Ok(m.cdf(x))
}

pub fn margin_pdf(m: &ModelMargin, x: f64) -> Result<f64> {
    finite(x)?;
    Ok(m.pdf(x))
}

pub fn margin_quantile(m: &ModelMargin, p: f64) -> Result<f64> {
    m.quantile(p)
}
