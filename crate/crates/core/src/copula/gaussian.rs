use crate::special_fn::{bvn_cdf, ln_gauss_copula_density, norm_cdf, norm_quantile, Correlation};

use super::BivariateCopula;

/// Gaussian copula `C(u1, u2) = Φ_ρ(Φ⁻¹(u1), Φ⁻¹(u2))`.
#[derive(Debug, Clone, Copy)]
pub struct GaussianCopula {
    rho: f64,
    rho_c: f64,
}

impl GaussianCopula {
    pub fn new(rho: Correlation) -> Self {
        let rho = rho.value();
        Self {
            rho,
            rho_c: (1.0 - rho * rho).sqrt(),
        }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

impl BivariateCopula for GaussianCopula {
    fn cdf(&self, u1: f64, u2: f64) -> f64 {
        bvn_cdf(norm_quantile(u1), norm_quantile(u2), self.rho)
    }

    fn ln_pdf(&self, u1: f64, u2: f64) -> f64 {
        ln_gauss_copula_density(norm_quantile(u1), norm_quantile(u2), self.rho)
    }

    fn partial1(&self, u1: f64, u2: f64) -> f64 {
        let (z1, z2) = (norm_quantile(u1), norm_quantile(u2));
        norm_cdf((z2 - self.rho * z1) / self.rho_c)
    }
}
