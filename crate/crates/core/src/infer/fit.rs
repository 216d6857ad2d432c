//! Maximum likelihood fits on an unconstrained parameter scale.

use serde::{Deserialize, Serialize};

use crate::copula::{CopulaKind, GumbelAlpha, ModelParams, QuadratureSpec};
use crate::error::{Error, Result};
use crate::special_fn::{norm_quantile, Correlation};

use super::bootstrap::BootIntervals;
use super::censor::{CensoringConfig, RegionCounts};
use super::likelihood::Plan;
use super::optim::{nelder_mead, NelderMeadOptions};
use super::PseudoSample;

/// Smallest sample accepted by [`fit`].
pub const MIN_FIT_SIZE: usize = 10;

const LOGIT_BOUND: f64 = 12.0;
const ATANH_BOUND: f64 = 7.0;
/// Range of `s` in `α = exp(−e^s)`.
const GUMBEL_S: (f64, f64) = (-20.0, 4.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CopulaFamily {
    Model,
    Gaussian,
    Gumbel,
}

impl CopulaFamily {
    pub fn of(k: &CopulaKind) -> Self {
        match k {
            CopulaKind::Model(_) => CopulaFamily::Model,
            CopulaKind::Gaussian(_) => CopulaFamily::Gaussian,
            CopulaKind::Gumbel(_) => CopulaFamily::Gumbel,
        }
    }

    /// Free parameters, used in the AIC.
    pub fn n_params(self) -> usize {
        match self {
            CopulaFamily::Model => 3,
            CopulaFamily::Gaussian | CopulaFamily::Gumbel => 1,
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            CopulaFamily::Model => &["delta_l", "delta_u", "rho"],
            CopulaFamily::Gaussian => &["rho"],
            CopulaFamily::Gumbel => &["alpha"],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CopulaFamily::Model => "model",
            CopulaFamily::Gaussian => "gaussian",
            CopulaFamily::Gumbel => "gumbel",
        }
    }
}

impl std::str::FromStr for CopulaFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "model" => Ok(CopulaFamily::Model),
            "gaussian" => Ok(CopulaFamily::Gaussian),
            "gumbel" => Ok(CopulaFamily::Gumbel),
            _ => Err(Error::domain(format!(
                "unknown copula family '{s}' (expected model, gaussian or gumbel)"
            ))),
        }
    }
}

/// Parameter values of `k` in the order of [`CopulaFamily::param_names`].
pub fn param_values(k: &CopulaKind) -> Vec<f64> {
    match k {
        CopulaKind::Model(p) => p.to_array().to_vec(),
        CopulaKind::Gaussian(r) => vec![r.value()],
        CopulaKind::Gumbel(a) => vec![a.value()],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", content = "censoring", rename_all = "kebab-case")]
pub enum Method {
    Full,
    Censored(CensoringConfig),
}

impl Method {
    pub fn censoring(&self) -> Option<&CensoringConfig> {
        match self {
            Method::Full => None,
            Method::Censored(c) => Some(c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub optimizer: NelderMeadOptions,
    /// Screen a grid of starting points before the simplex search (model only).
    pub multi_start: bool,
    /// Starting point; screened together with the grid when `multi_start` is set.
    pub start: Option<CopulaKind>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            optimizer: NelderMeadOptions::default(),
            multi_start: true,
            start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub kind: CopulaKind,
    pub method: Method,
    pub loglik: f64,
    /// `2k − 2·loglik`; censored values compare only across fits with the same censoring.
    pub aic: f64,
    pub n_used: usize,
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
    pub region_counts: Option<RegionCounts>,
    pub boot_intervals: Option<BootIntervals>,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn family(&self) -> CopulaFamily {
        CopulaFamily::of(&self.kind)
    }

    /// Model parameters, when the fitted family is the model.
    pub fn model_params(&self) -> Option<ModelParams> {
        match self.kind {
            CopulaKind::Model(p) => Some(p),
            _ => None,
        }
    }

    /// `(name, value)` pairs of the estimates.
    pub fn parameters(&self) -> Vec<(&'static str, f64)> {
        self.family()
            .param_names()
            .iter()
            .copied()
            .zip(param_values(&self.kind))
            .collect()
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn expit(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Unconstrained coordinates of `k`.
pub(crate) fn to_theta(k: &CopulaKind) -> Vec<f64> {
    match k {
        CopulaKind::Model(p) => vec![
            logit(p.delta_l()).clamp(-LOGIT_BOUND, LOGIT_BOUND),
            logit(p.delta_u()).clamp(-LOGIT_BOUND, LOGIT_BOUND),
            p.rho().atanh().clamp(-ATANH_BOUND, ATANH_BOUND),
        ],
        CopulaKind::Gaussian(r) => vec![r.value().atanh().clamp(-ATANH_BOUND, ATANH_BOUND)],
        CopulaKind::Gumbel(a) => vec![(-a.value().ln()).ln().clamp(GUMBEL_S.0, GUMBEL_S.1)],
    }
}

/// Parameters at unconstrained coordinates; coordinates are clamped to a
/// box whose image stays strictly inside the parameter space.
pub(crate) fn from_theta(family: CopulaFamily, theta: &[f64]) -> CopulaKind {
    let d = |t: f64| expit(t.clamp(-LOGIT_BOUND, LOGIT_BOUND));
    let r = |t: f64| Correlation::new(t.clamp(-ATANH_BOUND, ATANH_BOUND).tanh()).expect("tanh of a bounded value");
    match family {
        CopulaFamily::Model => CopulaKind::Model(
            ModelParams::new(d(theta[0]), d(theta[1]), r(theta[2]).value())
                .expect("transformed parameters are interior"),
        ),
        CopulaFamily::Gaussian => CopulaKind::Gaussian(r(theta[0])),
        CopulaFamily::Gumbel => {
            let s = theta[0].clamp(GUMBEL_S.0, GUMBEL_S.1);
            CopulaKind::Gumbel(GumbelAlpha::new((-s.exp()).exp()).expect("alpha in (0, 1]"))
        }
    }
}

/// Correlation of the normal scores `Φ^{-1}(u)`.
pub(crate) fn normal_score_correlation(points: &[(f64, f64)]) -> f64 {
    let z: Vec<(f64, f64)> = points
        .iter()
        .map(|&(a, b)| (norm_quantile(a), norm_quantile(b)))
        .collect();
    let n = z.len() as f64;
    let (ma, mb) = z.iter().fold((0.0, 0.0), |s, &(a, b)| (s.0 + a / n, s.1 + b / n));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for &(a, b) in &z {
        sab += (a - ma) * (b - mb);
        saa += (a - ma) * (a - ma);
        sbb += (b - mb) * (b - mb);
    }
    let r = sab / (saa * sbb).sqrt();
    if r.is_finite() {
        r
    } else {
        0.0
    }
}

/// Candidate starting points, in screening order.
fn candidates(family: CopulaFamily, sample: &PseudoSample, opts: &FitOptions) -> Vec<CopulaKind> {
    let mut out: Vec<CopulaKind> = opts
        .start
        .iter()
        .copied()
        .filter(|k| CopulaFamily::of(k) == family)
        .collect();
    if !out.is_empty() && !opts.multi_start {
        return out;
    }
    let r0 = normal_score_correlation(sample.points()).clamp(-0.9, 0.9);
    match family {
        CopulaFamily::Model => {
            let grid: &[(f64, f64)] = if opts.multi_start {
                &[(0.5, 0.5), (0.25, 0.25), (0.25, 0.75), (0.75, 0.25), (0.75, 0.75)]
            } else {
                &[(0.5, 0.5)]
            };
            for &(dl, du) in grid {
                out.push(CopulaKind::Model(
                    ModelParams::new(dl, du, r0).expect("grid is interior"),
                ));
            }
        }
        CopulaFamily::Gaussian => out.push(CopulaKind::Gaussian(Correlation::new(r0).expect("clamped"))),
        CopulaFamily::Gumbel => {
            // Kendall's τ of the Gaussian copula with correlation r0, and τ = 1 − α
            let tau = 2.0 / std::f64::consts::PI * r0.asin();
            out.push(CopulaKind::Gumbel(
                GumbelAlpha::new(1.0 - tau.clamp(0.05, 0.95)).expect("clamped"),
            ));
        }
    }
    out
}

/// Maximizes the full or censored log-likelihood of `family` on `sample`.
///
/// Each candidate start is evaluated once and the simplex search runs from
/// the best of them. A run that exhausts its iteration budget returns the
/// best point found with `converged = false`.
///
/// ```no_run
/// use asymtail::copula::{ModelParams, QuadratureSpec};
/// use asymtail::infer::{fit, pseudo_observations, CopulaFamily, FitOptions, Method};
/// use asymtail::sim::{sample_model, SeededGenerator};
/// let p = ModelParams::new(0.7, 0.2, 0.5).unwrap();
/// let xs = sample_model(&p, 1000, &mut SeededGenerator::new(1, 0)).unwrap();
/// let s = pseudo_observations(&xs).unwrap();
/// let r = fit(CopulaFamily::Model, &QuadratureSpec::fast(), &s, &Method::Full, &FitOptions::default()).unwrap();
/// println!("{:?} aic = {}", r.kind, r.aic);
/// ```
pub fn fit(
    family: CopulaFamily,
    q: &QuadratureSpec,
    sample: &PseudoSample,
    method: &Method,
    opts: &FitOptions,
) -> Result<FitResult> {
    fit_weighted(family, q, sample, method, opts, None)
}

pub(crate) fn fit_weighted(
    family: CopulaFamily,
    q: &QuadratureSpec,
    sample: &PseudoSample,
    method: &Method,
    opts: &FitOptions,
    weights: Option<&[f64]>,
) -> Result<FitResult> {
    if sample.len() < MIN_FIT_SIZE {
        return Err(Error::Ingestion(format!(
            "fitting needs at least {MIN_FIT_SIZE} points, got {}",
            sample.len()
        )));
    }
    let plan = Plan::new(sample, method, weights);
    let objective = |k: &CopulaKind| plan.eval(k, q).map_or(f64::INFINITY, |l| -l);

    let starts = candidates(family, sample, opts);
    let (start, start_value) = starts
        .iter()
        .map(|k| (*k, objective(k)))
        .fold(None, |best: Option<(CopulaKind, f64)>, (k, v)| match best {
            Some((_, bv)) if bv <= v => best,
            _ => Some((k, v)),
        })
        .expect("at least one candidate");
    if !start_value.is_finite() {
        // every start failed: report the first offending point
        plan.eval_checked(&start, q)?;
    }

    let nm = nelder_mead(
        |t| objective(&from_theta(family, t)),
        &to_theta(&start),
        &opts.optimizer,
    );
    let kind = from_theta(family, &nm.x);
    let loglik = -nm.value;
    let mut warnings = Vec::new();
    if !nm.converged {
        warnings.push(format!(
            "optimizer stopped after {} iterations without meeting the tolerance",
            nm.iterations
        ));
    }
    let region_counts = method.censoring().map(|c| c.count(sample.points()));
    if let Some(rc) = region_counts {
        if rc.a == 0 {
            warnings.push("no uncensored points: the joint-tail region is empty".to_string());
        }
    }
    let k = family.n_params() as f64;
    Ok(FitResult {
        kind,
        method: *method,
        loglik,
        aic: 2.0 * k - 2.0 * loglik,
        n_used: sample.len(),
        converged: nm.converged,
        iterations: nm.iterations,
        evaluations: nm.evaluations + starts.len(),
        region_counts,
        boot_intervals: None,
        warnings,
    })
}
