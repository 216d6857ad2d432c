//! Likelihood inference: pseudo-observations, full and censored
//! log-likelihoods, maximum likelihood fits, kernel-weighted local fits and
//! the parametric bootstrap.
//!
//! Parameters are optimized on an unconstrained scale: `logit` for `δ_L` and
//! `δ_U`, `atanh` for `ρ`, and `α = exp(−e^s)` for the Gumbel parameter.

mod bootstrap;
mod censor;
mod fit;
mod likelihood;
mod local;
mod optim;

pub use bootstrap::{parametric_bootstrap, BootInterval, BootIntervals, MAX_FAILURE_RATE, MIN_REPLICATES};
pub use censor::{region_probabilities, CensoringConfig, Region, RegionCounts, Scheme, TieBreak};
pub use fit::{fit, param_values, CopulaFamily, FitOptions, FitResult, Method, MIN_FIT_SIZE};
pub use likelihood::{censored_loglik, full_loglik, loglik};
pub use local::{biweight, local_fit, LocalFitOptions, LocalFitRow, LocalFitSeries, MIN_WEIGHT_MASS};
pub use optim::{nelder_mead, NelderMeadOptions, NelderMeadResult};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points on the open unit square in time order, with their time indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoSample {
    points: Vec<(f64, f64)>,
    index: Vec<usize>,
}

impl PseudoSample {
    /// Wraps points already on the uniform scale; indices are `0..n`.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        let index = (0..points.len()).collect();
        Self::with_index(points, index)
    }

    pub fn with_index(points: Vec<(f64, f64)>, index: Vec<usize>) -> Result<Self> {
        if points.len() != index.len() {
            return Err(Error::domain("points and time indices differ in length"));
        }
        let inside = |u: f64| u > 0.0 && u < 1.0;
        if let Some(j) = points.iter().position(|&(a, b)| !(inside(a) && inside(b))) {
            let (a, b) = points[j];
            return Err(Error::domain(format!(
                "point {j} ({a}, {b}) lies outside the open unit square"
            )));
        }
        Ok(Self { points, index })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn index(&self) -> &[usize] {
        &self.index
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Ranks scaled by `1/(n + 1)`, ties sharing their average rank.
fn scaled_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j hold ranks i+1..=j+1
        let rank = (i + j + 2) as f64 / 2.0;
        for &k in &order[i..=j] {
            out[k] = rank / (n + 1) as f64;
        }
        i = j + 1;
    }
    out
}

/// Rank transform of raw pairs to pseudo-uniform scores `rank/(n + 1)`.
///
/// ```
/// use asymtail::infer::pseudo_observations;
/// let s = pseudo_observations(&[(3.0, 1.0), (1.0, 1.0), (2.0, 2.0)]).unwrap();
/// assert_eq!(s.points()[0], (0.75, 0.375));
/// ```
pub fn pseudo_observations(raw: &[(f64, f64)]) -> Result<PseudoSample> {
    if raw.len() < 2 {
        return Err(Error::Ingestion(format!(
            "need at least 2 observations for ranks, got {}",
            raw.len()
        )));
    }
    if let Some(j) = raw.iter().position(|&(a, b)| !(a.is_finite() && b.is_finite())) {
        return Err(Error::Ingestion(format!(
            "row {j} is not finite: ({}, {})",
            raw[j].0, raw[j].1
        )));
    }
    let a: Vec<f64> = raw.iter().map(|p| p.0).collect();
    let b: Vec<f64> = raw.iter().map(|p| p.1).collect();
    let points = scaled_ranks(&a).into_iter().zip(scaled_ranks(&b)).collect();
    PseudoSample::new(points)
}
