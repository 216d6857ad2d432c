use super::params::GumbelAlpha;
use super::BivariateCopula;

/// Gumbel (logistic) extreme-value copula
/// `C(u1, u2) = exp(−[(−ln u1)^{1/α} + (−ln u2)^{1/α}]^α)`.
#[derive(Debug, Clone, Copy)]
pub struct GumbelCopula {
    alpha: f64,
    theta: f64,
}

impl GumbelCopula {
    pub fn new(alpha: GumbelAlpha) -> Self {
        let alpha = alpha.value();
        Self {
            alpha,
            theta: 1.0 / alpha,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Upper tail dependence coefficient `2 − 2^α`.
    pub fn chi_upper(&self) -> f64 {
        2.0 - 2f64.powf(self.alpha)
    }

    /// `(t1, t2, A)` with `t = −ln u` and `A = t1^θ + t2^θ`.
    #[inline]
    fn parts(&self, u1: f64, u2: f64) -> (f64, f64, f64) {
        let t1 = -u1.ln();
        let t2 = -u2.ln();
        (t1, t2, t1.powf(self.theta) + t2.powf(self.theta))
    }
}

impl BivariateCopula for GumbelCopula {
    fn cdf(&self, u1: f64, u2: f64) -> f64 {
        let (_, _, a) = self.parts(u1, u2);
        (-a.powf(self.alpha)).exp()
    }

    fn ln_pdf(&self, u1: f64, u2: f64) -> f64 {
        let (t1, t2, a) = self.parts(u1, u2);
        let th = self.theta;
        let aa = a.powf(self.alpha);
        -aa + t1 + t2 + (th - 1.0) * (t1.ln() + t2.ln()) + (self.alpha - 2.0) * a.ln() + (aa + th - 1.0).ln()
    }

    fn partial1(&self, u1: f64, u2: f64) -> f64 {
        let (t1, _, a) = self.parts(u1, u2);
        let c = (-a.powf(self.alpha)).exp();
        (c * a.powf(self.alpha - 1.0) * t1.powf(self.theta - 1.0) / u1).clamp(0.0, 1.0)
    }
}
