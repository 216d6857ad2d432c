//! Parametric bootstrap intervals.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::QuadratureSpec;
use crate::error::{Error, Result};
use crate::sim::{sample_copula, SeededGenerator};

use super::fit::{fit, param_values, FitOptions, FitResult};
use super::pseudo_observations;

/// Fewest replicates accepted.
pub const MIN_REPLICATES: usize = 50;
/// Failure fraction above which intervals are flagged unreliable.
pub const MAX_FAILURE_RATE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootInterval {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootIntervals {
    pub level: f64,
    pub replicates: usize,
    pub failures: usize,
    pub unreliable: bool,
    pub intervals: Vec<BootInterval>,
}

/// Equal-tailed interval from order statistics of `values` (sorted in place).
///
/// With `m` values and `a = (1 − level)/2` the endpoints are the order
/// statistics at zero-based positions `⌊a(m − 1)⌋` and `⌈(1 − a)(m − 1)⌉`.
pub(crate) fn order_interval(values: &mut [f64], level: f64) -> (f64, f64) {
    values.sort_by(f64::total_cmp);
    let m = values.len();
    let a = 0.5 * (1.0 - level);
    let top = (m - 1) as f64;
    // the nudge keeps exact products like 0.05 · 100 from rounding down
    let lo = (a * top + 1e-9).floor() as usize;
    let hi = (((1.0 - a) * top - 1e-9).ceil() as usize).min(m - 1);
    (values[lo], values[hi])
}

/// Simulates `b` samples of size `n` from the fitted copula, refits each with
/// the original method and returns per-parameter intervals at `level`.
///
/// Replicate `i` draws from `g.fork(i)`, so results do not depend on the
/// number of worker threads. Refits that fail or do not converge are dropped
/// and counted.
pub fn parametric_bootstrap(
    q: &QuadratureSpec,
    fitted: &FitResult,
    n: usize,
    b: usize,
    level: f64,
    g: &SeededGenerator,
    opts: &FitOptions,
) -> Result<BootIntervals> {
    if b < MIN_REPLICATES {
        return Err(Error::domain(format!(
            "bootstrap needs at least {MIN_REPLICATES} replicates, got {b}"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }
    let family = fitted.family();
    let estimates: Vec<Option<Vec<f64>>> = (0..b as u64)
        .into_par_iter()
        .map(|i| {
            let mut gi = g.fork(i);
            let us = sample_copula(&fitted.kind, n, &mut gi).ok()?;
            let s = pseudo_observations(&us).ok()?;
            let r = fit(family, q, &s, &fitted.method, opts).ok()?;
            r.converged.then(|| param_values(&r.kind))
        })
        .collect();
    let ok: Vec<&Vec<f64>> = estimates.iter().flatten().collect();
    let failures = b - ok.len();
    if ok.is_empty() {
        return Err(Error::Numeric(format!("all {b} bootstrap refits failed")));
    }
    let intervals = family
        .param_names()
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let mut col: Vec<f64> = ok.iter().map(|v| v[j]).collect();
            let (lo, hi) = order_interval(&mut col, level);
            BootInterval {
                name: name.to_string(),
                lo,
                hi,
            }
        })
        .collect();
    Ok(BootIntervals {
        level,
        replicates: b,
        failures,
        unreliable: failures as f64 > MAX_FAILURE_RATE * b as f64,
        intervals,
    })
}
