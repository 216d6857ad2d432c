//! Copulas: the asymmetric-tail model and the Gaussian and Gumbel comparison families.
//!
//! The model copula has no closed form. Its joint CDF, density and partial
//! derivatives on the `X` scale are one-dimensional integrals over the common
//! shock `r`, evaluated by [`ModelCopula`] with the rule chosen in a
//! [`QuadratureSpec`]. On the uniform scale every family implements
//! [`BivariateCopula`].

mod gaussian;
mod gumbel;
mod model;
mod params;
pub(crate) mod ztable;

pub use gaussian::GaussianCopula;
pub use gumbel::GumbelCopula;
pub use model::ModelCopula;
pub use params::{CopulaKind, GumbelAlpha, ModelParams, QuadRule, QuadratureSpec};

use crate::error::{Error, Result};

/// A bivariate copula evaluated on the open unit square.
///
/// Inputs are assumed to lie in `(0, 1)`; the checked free functions of this
/// module validate them. All three families are exchangeable, so the second
/// partial derivative is the first with its arguments swapped.
pub trait BivariateCopula: Send + Sync {
    /// `C(u1, u2)`.
    fn cdf(&self, u1: f64, u2: f64) -> f64;

    /// `log c(u1, u2)`.
    fn ln_pdf(&self, u1: f64, u2: f64) -> f64;

    /// `c(u1, u2)`.
    fn pdf(&self, u1: f64, u2: f64) -> f64 {
        self.ln_pdf(u1, u2).exp()
    }

    /// `∂C/∂u1`, i.e. `Pr(U2 ≤ u2 | U1 = u1)`.
    fn partial1(&self, u1: f64, u2: f64) -> f64;

    /// `∂C/∂u2`, i.e. `Pr(U1 ≤ u1 | U2 = u2)`.
    fn partial2(&self, u1: f64, u2: f64) -> f64 {
        self.partial1(u2, u1)
    }

    /// `∂C/∂u_which` with `which ∈ {1, 2}`.
    fn partial(&self, which: usize, u1: f64, u2: f64) -> f64 {
        if which == 1 {
            self.partial1(u1, u2)
        } else {
            self.partial2(u1, u2)
        }
    }
}

/// A ready-to-evaluate copula of any supported family.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone)]
pub enum Copula {
    Model(ModelCopula),
    Gaussian(GaussianCopula),
    Gumbel(GumbelCopula),
}

impl Copula {
    pub fn new(kind: &CopulaKind, quad: &QuadratureSpec) -> Self {
        match *kind {
            CopulaKind::Model(p) => Copula::Model(ModelCopula::new(p, *quad)),
            CopulaKind::Gaussian(rho) => Copula::Gaussian(GaussianCopula::new(rho)),
            CopulaKind::Gumbel(alpha) => Copula::Gumbel(GumbelCopula::new(alpha)),
        }
    }

    fn inner(&self) -> &dyn BivariateCopula {
        match self {
            Copula::Model(c) => c,
            Copula::Gaussian(c) => c,
            Copula::Gumbel(c) => c,
        }
    }
}

impl BivariateCopula for Copula {
    fn cdf(&self, u1: f64, u2: f64) -> f64 {
        self.inner().cdf(u1, u2)
    }

    fn ln_pdf(&self, u1: f64, u2: f64) -> f64 {
        self.inner().ln_pdf(u1, u2)
    }

    fn partial1(&self, u1: f64, u2: f64) -> f64 {
        self.inner().partial1(u1, u2)
    }

    fn partial2(&self, u1: f64, u2: f64) -> f64 {
        self.inner().partial2(u1, u2)
    }
}

fn check_finite(x1: f64, x2: f64) -> Result<()> {
    if x1.is_finite() && x2.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "joint distribution arguments must be finite, got ({x1}, {x2})"
        )))
    }
}

fn check_unit(u1: f64, u2: f64) -> Result<()> {
    let inside = |u: f64| u > 0.0 && u < 1.0;
    if inside(u1) && inside(u2) {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "copula arguments must lie in the open unit square, got ({u1}, {u2})"
        )))
    }
}

fn check_which(which: usize) -> Result<()> {
    if which == 1 || which == 2 {
        Ok(())
    } else {
        Err(Error::domain(format!("margin index must be 1 or 2, got {which}")))
    }
}

/// Joint CDF `F_X(x1, x2)` of the model.
pub fn joint_cdf(p: &ModelParams, q: &QuadratureSpec, x1: f64, x2: f64) -> Result<f64> {
    check_finite(x1, x2)?;
    Ok(ModelCopula::new(*p, *q).joint_cdf(x1, x2))
}

/// Joint density `f_X(x1, x2)` of the model.
pub fn joint_pdf(p: &ModelParams, q: &QuadratureSpec, x1: f64, x2: f64) -> Result<f64> {
    check_finite(x1, x2)?;
    Ok(ModelCopula::new(*p, *q).joint_pdf(x1, x2))
}

/// `∂F_X/∂x_which` at `(x1, x2)`.
pub fn joint_cdf_partial(p: &ModelParams, q: &QuadratureSpec, which: usize, x1: f64, x2: f64) -> Result<f64> {
    check_which(which)?;
    check_finite(x1, x2)?;
    let m = ModelCopula::new(*p, *q);
    Ok(if which == 1 {
        m.joint_partial1(x1, x2)
    } else {
        m.joint_partial1(x2, x1)
    })
}

/// `C(u1, u2)` for any family.
pub fn copula_cdf(k: &CopulaKind, q: &QuadratureSpec, u1: f64, u2: f64) -> Result<f64> {
    check_unit(u1, u2)?;
    Ok(Copula::new(k, q).cdf(u1, u2))
}

/// `c(u1, u2)` for any family.
pub fn copula_pdf(k: &CopulaKind, q: &QuadratureSpec, u1: f64, u2: f64) -> Result<f64> {
    check_unit(u1, u2)?;
    Ok(Copula::new(k, q).pdf(u1, u2))
}

/// `∂C/∂u_which` for any family.
pub fn copula_cdf_partial(k: &CopulaKind, q: &QuadratureSpec, which: usize, u1: f64, u2: f64) -> Result<f64> {
    check_which(which)?;
    check_unit(u1, u2)?;
    Ok(Copula::new(k, q).partial(which, u1, u2))
}
