//! Seeded simulation studies: stationary recipes over a grid of full and
//! censored estimators, and the dynamic local-likelihood recipe.
//!
//! Replicate `r` draws from `SeededGenerator::new(seed, 0).fork(r)` and
//! replicates are merged by index, so a report depends only on its
//! configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::{Copula, CopulaKind, GumbelAlpha, ModelParams, QuadratureSpec};
use crate::error::{Error, Result};
use crate::infer::{
    fit, local_fit, param_values, pseudo_observations, CensoringConfig, CopulaFamily, FitOptions, LocalFitOptions,
    LocalFitSeries, Method, Scheme,
};
use crate::io::{write_table, write_text, Header};
use crate::sim::{rising_lower_schedule, sample_copula, sample_dynamic, SeededGenerator};
use crate::tail::{chi_lower, theoretical_tail, TailClass, MIN_MC_BUDGET};

/// Lower censoring levels of the stationary grid; `t_U = 1 − t_L`.
pub const CENSOR_LEVELS: [f64; 5] = [0.01, 0.02, 0.05, 0.1, 0.2];
/// Levels used with misspecified Gumbel data.
pub const GUMBEL_CENSOR_LEVELS: [f64; 3] = [0.01, 0.02, 0.05];
pub const STATIONARY_N: usize = 1000;
pub const DYNAMIC_N: usize = 1500;
pub const GUMBEL_ALPHA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Recipe {
    /// `(δ_L, δ_U, ρ) = (0.7, 0.2, 0.5)`
    Case1,
    /// `(0.3, 0.2, 0.5)`
    Case2,
    /// `(0.6, 0.7, 0.5)`
    Case3,
    /// Gumbel data with `α = 0.5`, fitted by the model.
    GumbelAlpha,
    /// Rising lower-tail schedule fitted by local likelihood.
    Dynamic,
}

impl Recipe {
    pub const ALL: [Recipe; 5] = [
        Recipe::Case1,
        Recipe::Case2,
        Recipe::Case3,
        Recipe::GumbelAlpha,
        Recipe::Dynamic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Recipe::Case1 => "case1",
            Recipe::Case2 => "case2",
            Recipe::Case3 => "case3",
            Recipe::GumbelAlpha => "gumbel-alpha",
            Recipe::Dynamic => "dynamic",
        }
    }

    /// Data-generating copula of a stationary recipe.
    pub fn truth(self) -> Option<CopulaKind> {
        let model = |a, b, c| Some(CopulaKind::Model(ModelParams::new(a, b, c).expect("valid recipe")));
        match self {
            Recipe::Case1 => model(0.7, 0.2, 0.5),
            Recipe::Case2 => model(0.3, 0.2, 0.5),
            Recipe::Case3 => model(0.6, 0.7, 0.5),
            Recipe::GumbelAlpha => Some(CopulaKind::Gumbel(
                GumbelAlpha::new(GUMBEL_ALPHA).expect("valid recipe"),
            )),
            Recipe::Dynamic => None,
        }
    }

    pub fn default_n(self) -> usize {
        match self {
            Recipe::Dynamic => DYNAMIC_N,
            _ => STATIONARY_N,
        }
    }

    /// The full grid: 16 estimators for the model cases, 10 for Gumbel data.
    pub fn estimators(self) -> Vec<Estimator> {
        match self {
            Recipe::Case1 | Recipe::Case2 | Recipe::Case3 => estimator_grid(&CENSOR_LEVELS),
            Recipe::GumbelAlpha => estimator_grid(&GUMBEL_CENSOR_LEVELS),
            Recipe::Dynamic => vec![Estimator::full()],
        }
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Recipe {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Recipe::ALL.into_iter().find(|r| r.name() == s).ok_or_else(|| {
            Error::domain(format!(
                "unknown recipe '{s}' (case1, case2, case3, gumbel-alpha, dynamic)"
            ))
        })
    }
}

/// A labelled estimation method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimator {
    pub label: String,
    pub method: Method,
}

impl Estimator {
    pub fn full() -> Self {
        Self {
            label: "full".into(),
            method: Method::Full,
        }
    }

    pub fn censored(scheme: Scheme, t_l: f64) -> Result<Self> {
        Ok(Self {
            label: format!("scheme{}-{t_l}", u8::from(scheme)),
            method: Method::Censored(CensoringConfig::new(scheme, t_l)?),
        })
    }
}

/// Full likelihood, then every scheme at every level.
pub fn estimator_grid(levels: &[f64]) -> Vec<Estimator> {
    let mut v = vec![Estimator::full()];
    for scheme in [Scheme::One, Scheme::Two, Scheme::Three] {
        for &t in levels {
            v.push(Estimator::censored(scheme, t).expect("grid levels lie in (0, 1/2)"));
        }
    }
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub recipe: Recipe,
    pub replicates: usize,
    pub seed: u64,
    pub n: usize,
    pub estimators: Vec<Estimator>,
    pub quad: QuadratureSpec,
    pub fit: FitOptions,
    /// Attach model-implied tail coefficients to every fit.
    pub tails: bool,
    pub mc_budget: usize,
    pub local: LocalFitOptions,
}

impl StudyConfig {
    /// The recipe's settings with `replicates` replicates.
    pub fn new(recipe: Recipe, replicates: usize, seed: u64) -> Self {
        Self {
            recipe,
            replicates,
            seed,
            n: recipe.default_n(),
            estimators: recipe.estimators(),
            quad: match recipe {
                Recipe::Dynamic => QuadratureSpec::coarse(),
                _ => QuadratureSpec::fast(),
            },
            fit: FitOptions::default(),
            tails: recipe == Recipe::GumbelAlpha,
            mc_budget: MIN_MC_BUDGET,
            local: LocalFitOptions::default(),
        }
    }
}

/// Model-implied limits of one fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub chi_l: f64,
    pub eta_l: f64,
    pub chi_u: f64,
    pub eta_u: f64,
    pub class_l: TailClass,
    pub class_u: TailClass,
}

/// One estimator applied to one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub replicate: usize,
    pub estimator: String,
    /// Empty when the fit failed.
    pub params: Vec<f64>,
    pub loglik: Option<f64>,
    pub converged: bool,
    pub error: Option<String>,
    pub tail: Option<TailEstimate>,
}

impl Estimate {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Tail summary over the successful fits of one estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailTable {
    pub pct_chi_l_zero: f64,
    pub eta_l_median: f64,
    pub eta_l_mad: f64,
    pub chi_u_median: f64,
    pub chi_u_mad: f64,
    pub pct_eta_u_one: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub estimator: String,
    pub successes: usize,
    pub failures: usize,
    pub not_converged: usize,
    pub medians: Vec<f64>,
    pub iqrs: Vec<f64>,
    pub tail: Option<TailTable>,
}

/// Per-index medians across replicates of the dynamic recipe, with the truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicRow {
    pub index: usize,
    pub true_delta_l: f64,
    pub true_chi_l: f64,
    pub median_delta_l: f64,
    pub median_delta_u: f64,
    pub median_rho: f64,
    pub median_chi_l: f64,
    pub median_chi_u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicReplicate {
    pub replicate: usize,
    pub series: Option<LocalFitSeries>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StudyOutcome {
    Stationary {
        estimates: Vec<Estimate>,
        summary: Vec<EstimatorSummary>,
    },
    Dynamic {
        replicates: Vec<DynamicReplicate>,
        summary: Vec<DynamicRow>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub outcome: StudyOutcome,
}

impl StudyReport {
    /// Replicates or fits that failed outright.
    pub fn failures(&self) -> usize {
        match &self.outcome {
            StudyOutcome::Stationary { estimates, .. } => estimates.iter().filter(|e| !e.ok()).count(),
            StudyOutcome::Dynamic { replicates, .. } => replicates.iter().filter(|r| r.error.is_some()).count(),
        }
    }

    pub fn summary_for(&self, estimator: &str) -> Option<&EstimatorSummary> {
        match &self.outcome {
            StudyOutcome::Stationary { summary, .. } => summary.iter().find(|s| s.estimator == estimator),
            StudyOutcome::Dynamic { .. } => None,
        }
    }
}

/// Sample quantile with linear interpolation between order statistics
/// (`h = (m − 1)p`). NaN for an empty slice.
pub fn quantile(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * p;
    let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

pub fn iqr(values: &[f64]) -> f64 {
    quantile(values, 0.75) - quantile(values, 0.25)
}

/// Median absolute deviation scaled by 1.4826 for consistency at the normal.
pub fn mad(values: &[f64]) -> f64 {
    let m = median(values);
    let dev: Vec<f64> = values.iter().map(|v| (v - m).abs()).collect();
    1.4826 * median(&dev)
}

fn tail_estimate(kind: &CopulaKind, budget: usize) -> Option<TailEstimate> {
    let CopulaKind::Model(p) = kind else { return None };
    let l = theoretical_tail(p, budget);
    Some(TailEstimate {
        chi_l: l.chi_l,
        eta_l: l.eta_l,
        chi_u: l.chi_u,
        eta_u: l.eta_u,
        class_l: l.class_l,
        class_u: l.class_u,
    })
}

fn replicate_estimates(cfg: &StudyConfig, truth: &CopulaKind, r: usize) -> Vec<Estimate> {
    let fail = |label: &str, e: &Error| Estimate {
        replicate: r,
        estimator: label.to_string(),
        params: Vec::new(),
        loglik: None,
        converged: false,
        error: Some(e.to_string()),
        tail: None,
    };
    let mut g = SeededGenerator::new(cfg.seed, 0).fork(r as u64);
    let sample = match sample_copula(truth, cfg.n, &mut g).and_then(|us| pseudo_observations(&us)) {
        Ok(s) => s,
        Err(e) => return cfg.estimators.iter().map(|est| fail(&est.label, &e)).collect(),
    };
    cfg.estimators
        .iter()
        .map(
            |est| match fit(CopulaFamily::Model, &cfg.quad, &sample, &est.method, &cfg.fit) {
                Ok(res) => Estimate {
                    replicate: r,
                    estimator: est.label.clone(),
                    params: param_values(&res.kind),
                    loglik: Some(res.loglik),
                    converged: res.converged,
                    error: None,
                    tail: if cfg.tails {
                        tail_estimate(&res.kind, cfg.mc_budget)
                    } else {
                        None
                    },
                },
                Err(e) => fail(&est.label, &e),
            },
        )
        .collect()
}

fn summarize(est: &Estimator, estimates: &[Estimate]) -> EstimatorSummary {
    let mine: Vec<&Estimate> = estimates.iter().filter(|e| e.estimator == est.label).collect();
    let ok: Vec<&Estimate> = mine.iter().copied().filter(|e| e.ok()).collect();
    let column = |j: usize| -> Vec<f64> { ok.iter().map(|e| e.params[j]).collect() };
    let k = CopulaFamily::Model.n_params();
    let tails: Vec<TailEstimate> = ok.iter().filter_map(|e| e.tail).collect();
    let tail = (!tails.is_empty()).then(|| {
        let pct = |f: &dyn Fn(&TailEstimate) -> bool| {
            100.0 * tails.iter().filter(|t| f(t)).count() as f64 / tails.len() as f64
        };
        let eta_l: Vec<f64> = tails.iter().map(|t| t.eta_l).collect();
        let chi_u: Vec<f64> = tails.iter().map(|t| t.chi_u).collect();
        TailTable {
            pct_chi_l_zero: pct(&|t| t.class_l == TailClass::AI),
            eta_l_median: median(&eta_l),
            eta_l_mad: mad(&eta_l),
            chi_u_median: median(&chi_u),
            chi_u_mad: mad(&chi_u),
            pct_eta_u_one: pct(&|t| t.class_u == TailClass::AD),
        }
    });
    EstimatorSummary {
        estimator: est.label.clone(),
        successes: ok.len(),
        failures: mine.len() - ok.len(),
        not_converged: ok.iter().filter(|e| !e.converged).count(),
        medians: (0..k).map(|j| median(&column(j))).collect(),
        iqrs: (0..k).map(|j| iqr(&column(j))).collect(),
        tail,
    }
}

fn dynamic_summary(cfg: &StudyConfig, replicates: &[DynamicReplicate]) -> Vec<DynamicRow> {
    let schedule = rising_lower_schedule(cfg.n);
    let series: Vec<&LocalFitSeries> = replicates.iter().filter_map(|r| r.series.as_ref()).collect();
    let (tl, _) = cfg.local.chi_levels;
    schedule
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let at = |f: &dyn Fn(&crate::infer::LocalFitRow) -> f64| -> f64 {
                median(&series.iter().map(|s| f(&s.rows[i])).collect::<Vec<_>>())
            };
            let par = |j: usize| at(&|row| param_values(&row.kind)[j]);
            DynamicRow {
                index: i,
                true_delta_l: p.delta_l(),
                true_chi_l: chi_lower(&Copula::new(&CopulaKind::Model(*p), &cfg.quad), tl),
                median_delta_l: par(0),
                median_delta_u: par(1),
                median_rho: par(2),
                median_chi_l: at(&|row| row.chi_l),
                median_chi_u: at(&|row| row.chi_u),
            }
        })
        .collect()
}

/// Runs every replicate of the recipe. Failed fits are recorded, not fatal.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyReport> {
    if cfg.replicates == 0 {
        return Err(Error::domain("a study needs at least one replicate"));
    }
    if cfg.estimators.is_empty() {
        return Err(Error::domain("a study needs at least one estimator"));
    }
    let outcome = match cfg.recipe.truth() {
        Some(truth) => {
            let estimates: Vec<Estimate> = (0..cfg.replicates)
                .into_par_iter()
                .flat_map_iter(|r| replicate_estimates(cfg, &truth, r))
                .collect();
            let summary = cfg.estimators.iter().map(|e| summarize(e, &estimates)).collect();
            StudyOutcome::Stationary { estimates, summary }
        }
        None => {
            let schedule = rising_lower_schedule(cfg.n);
            let method = cfg.estimators[0].method;
            let replicates: Vec<DynamicReplicate> = (0..cfg.replicates)
                .into_par_iter()
                .map(|r| {
                    let mut g = SeededGenerator::new(cfg.seed, 0).fork(r as u64);
                    let res = sample_dynamic(&schedule, &mut g)
                        .and_then(|us| pseudo_observations(&us))
                        .and_then(|s| local_fit(CopulaFamily::Model, &cfg.quad, &s, &method, &cfg.local));
                    match res {
                        Ok(series) => DynamicReplicate {
                            replicate: r,
                            series: Some(series),
                            error: None,
                        },
                        Err(e) => DynamicReplicate {
                            replicate: r,
                            series: None,
                            error: Some(e.to_string()),
                        },
                    }
                })
                .collect();
            let summary = dynamic_summary(cfg, &replicates);
            StudyOutcome::Dynamic { replicates, summary }
        }
    };
    Ok(StudyReport {
        config: cfg.clone(),
        outcome,
    })
}

fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

/// Writes `estimates.csv` (one row per fit or per index and replicate),
/// `summary.csv` and `report.json` into `dir`, returning their paths.
pub fn write_report(dir: &Path, header: &Header, report: &StudyReport) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let header = header
        .clone()
        .with("recipe", report.config.recipe.name())
        .with("config", serde_json::to_string(&report.config)?);
    let names = CopulaFamily::Model.param_names();
    let paths: Vec<PathBuf> = ["estimates.csv", "summary.csv", "report.json"]
        .iter()
        .map(|f| dir.join(f))
        .collect();
    match &report.outcome {
        StudyOutcome::Stationary { estimates, summary } => {
            let mut cols = vec!["replicate", "estimator", "converged", "loglik"];
            cols.extend(names);
            cols.extend(["chi_l", "eta_l", "chi_u", "eta_u", "error"]);
            let rows: Vec<Vec<String>> = estimates
                .iter()
                .map(|e| {
                    let mut r = vec![
                        e.replicate.to_string(),
                        e.estimator.clone(),
                        e.converged.to_string(),
                        e.loglik.map_or(String::new(), num),
                    ];
                    r.extend((0..names.len()).map(|j| e.params.get(j).map_or(String::new(), |v| num(*v))));
                    match e.tail {
                        Some(t) => r.extend([num(t.chi_l), num(t.eta_l), num(t.chi_u), num(t.eta_u)]),
                        None => r.extend(std::iter::repeat_n(String::new(), 4)),
                    }
                    r.push(e.error.clone().unwrap_or_default());
                    r
                })
                .collect();
            write_table(&paths[0], &header, &cols, &rows)?;

            let med: Vec<String> = names.iter().map(|n| format!("median_{n}")).collect();
            let iq: Vec<String> = names.iter().map(|n| format!("iqr_{n}")).collect();
            let mut cols: Vec<&str> = vec!["estimator", "successes", "failures", "not_converged"];
            cols.extend(med.iter().map(String::as_str));
            cols.extend(iq.iter().map(String::as_str));
            cols.extend([
                "pct_chi_l_zero",
                "eta_l_median",
                "eta_l_mad",
                "chi_u_median",
                "chi_u_mad",
                "pct_eta_u_one",
            ]);
            let rows: Vec<Vec<String>> = summary
                .iter()
                .map(|s| {
                    let mut r = vec![
                        s.estimator.clone(),
                        s.successes.to_string(),
                        s.failures.to_string(),
                        s.not_converged.to_string(),
                    ];
                    r.extend(s.medians.iter().chain(&s.iqrs).map(|v| num(*v)));
                    match &s.tail {
                        Some(t) => r.extend(
                            [
                                t.pct_chi_l_zero,
                                t.eta_l_median,
                                t.eta_l_mad,
                                t.chi_u_median,
                                t.chi_u_mad,
                                t.pct_eta_u_one,
                            ]
                            .map(num),
                        ),
                        None => r.extend(std::iter::repeat_n(String::new(), 6)),
                    }
                    r
                })
                .collect();
            write_table(&paths[1], &header, &cols, &rows)?;
        }
        StudyOutcome::Dynamic { replicates, summary } => {
            let cols = [
                "replicate",
                "index",
                "delta_l",
                "delta_u",
                "rho",
                "chi_l",
                "chi_u",
                "flags",
            ];
            let rows: Vec<Vec<String>> = replicates
                .iter()
                .filter_map(|r| r.series.as_ref().map(|s| (r.replicate, s)))
                .flat_map(|(rep, s)| {
                    s.rows.iter().map(move |row| {
                        let p = param_values(&row.kind);
                        vec![
                            rep.to_string(),
                            row.index.to_string(),
                            num(p[0]),
                            num(p[1]),
                            num(p[2]),
                            num(row.chi_l),
                            num(row.chi_u),
                            row.flags(),
                        ]
                    })
                })
                .collect();
            write_table(&paths[0], &header, &cols, &rows)?;
            let cols = [
                "index",
                "true_delta_l",
                "true_chi_l",
                "median_delta_l",
                "median_delta_u",
                "median_rho",
                "median_chi_l",
                "median_chi_u",
            ];
            let rows: Vec<Vec<String>> = summary
                .iter()
                .map(|d| {
                    let mut r = vec![d.index.to_string()];
                    r.extend(
                        [
                            d.true_delta_l,
                            d.true_chi_l,
                            d.median_delta_l,
                            d.median_delta_u,
                            d.median_rho,
                            d.median_chi_l,
                            d.median_chi_u,
                        ]
                        .map(num),
                    );
                    r
                })
                .collect();
            write_table(&paths[1], &header, &cols, &rows)?;
        }
    }
    write_text(&paths[2], &Header::new(), &serde_json::to_string_pretty(report)?)?;
    Ok(paths)
}
