//! Tail dependence: finite-level `χ_L(t)`, `χ_U(t)`, their limits, `η`, and
//! moving-window non-parametric estimates.
//!
//! For the model the limiting behaviour of each tail depends only on its own
//! `δ` and on `ρ`. With `δ ≤ 1/2` the tail is asymptotically independent and
//! `η` has a closed form. With `δ > 1/2` it is asymptotically dependent and
//! `χ = E[min(A₁, A₂)]`, where `A_i = e^{s W_i / δ} / E[e^{s W / δ}]` and
//! `s = −1` in the lower tail, `s = +1` in the upper tail. That expectation is
//! estimated by Monte Carlo with the normalizers in closed form.

use serde::{Deserialize, Serialize};

use crate::copula::{BivariateCopula, Copula, CopulaKind, ModelParams, QuadratureSpec};
use crate::dist::ModelMargin;
use crate::error::{Error, Result};
use crate::sim::SeededGenerator;
use crate::special_fn::{norm_cdf, norm_quantile};

/// Smallest Monte Carlo budget accepted without a warning.
pub const MIN_MC_BUDGET: usize = 100_000;
/// Default Monte Carlo budget for asymptotically dependent tails.
pub const DEFAULT_MC_BUDGET: usize = 1_000_000;
const MC_SEED: u64 = 0x7a11_c0de;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tail {
    Lower,
    Upper,
}

/// Extremal dependence class of one tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailClass {
    /// asymptotically dependent
    AD,
    /// asymptotically independent
    AI,
}

impl std::fmt::Display for TailClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TailClass::AD => "AD",
            TailClass::AI => "AI",
        })
    }
}

/// Class of a model tail with scale `delta`; the knife-edge `δ = 1/2` is AI.
pub fn class_of(delta: f64) -> TailClass {
    if delta > 0.5 {
        TailClass::AD
    } else {
        TailClass::AI
    }
}

/// Limiting tail coefficients of a copula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailLimits {
    pub chi_l: f64,
    pub chi_u: f64,
    pub eta_l: f64,
    pub eta_u: f64,
    pub class_l: TailClass,
    pub class_u: TailClass,
    /// Monte Carlo standard errors, present for estimated coefficients.
    pub chi_l_se: Option<f64>,
    pub chi_u_se: Option<f64>,
    pub warnings: Vec<String>,
}

/// Curves `χ_L(t)`, `χ_U(t)` on a threshold grid, with the limits when known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailSummary {
    pub chi_l_curve: Vec<(f64, f64)>,
    pub chi_u_curve: Vec<(f64, f64)>,
    pub limits: Option<TailLimits>,
}

/// `χ_L(t) = C(t, t) / t`.
pub fn chi_lower<C: BivariateCopula + ?Sized>(c: &C, t: f64) -> f64 {
    (c.cdf(t, t) / t).clamp(0.0, 1.0)
}

/// `χ_U(t) = (1 − 2t + C(t, t)) / (1 − t)`.
pub fn chi_upper<C: BivariateCopula + ?Sized>(c: &C, t: f64) -> f64 {
    ((1.0 - 2.0 * t + c.cdf(t, t)) / (1.0 - t)).clamp(0.0, 1.0)
}

fn check_level(t: f64) -> Result<()> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("threshold must lie in (0, 1), got {t}")))
    }
}

/// Both finite-level curves on the grid `ts`.
///
/// ```
/// use asymtail::copula::{CopulaKind, GumbelAlpha, QuadratureSpec};
/// use asymtail::tail::chi_curves;
/// let indep = CopulaKind::Gumbel(GumbelAlpha::new(1.0).unwrap());
/// let s = chi_curves(&indep, &QuadratureSpec::default(), &[0.1, 0.5]).unwrap();
/// assert!((s.chi_l_curve[0].1 - 0.1).abs() < 1e-12);
/// assert!((s.chi_u_curve[1].1 - 0.5).abs() < 1e-12);
/// ```
pub fn chi_curves(k: &CopulaKind, q: &QuadratureSpec, ts: &[f64]) -> Result<TailSummary> {
    for &t in ts {
        check_level(t)?;
    }
    let c = Copula::new(k, q);
    Ok(TailSummary {
        chi_l_curve: ts.iter().map(|&t| (t, chi_lower(&c, t))).collect(),
        chi_u_curve: ts.iter().map(|&t| (t, chi_upper(&c, t))).collect(),
        limits: None,
    })
}

/// Curves plus limits for any copula kind.
pub fn tail_summary(k: &CopulaKind, q: &QuadratureSpec, ts: &[f64], mc_budget: usize) -> Result<TailSummary> {
    let mut s = chi_curves(k, q, ts)?;
    s.limits = Some(tail_limits(k, mc_budget));
    Ok(s)
}

/// Limits for any copula kind: `theoretical_tail` for the model,
/// closed forms for the Gaussian and Gumbel families.
pub fn tail_limits(k: &CopulaKind, mc_budget: usize) -> TailLimits {
    match *k {
        CopulaKind::Model(p) => theoretical_tail(&p, mc_budget),
        CopulaKind::Gaussian(rho) => {
            let eta = (1.0 + rho.value()) / 2.0;
            TailLimits {
                chi_l: 0.0,
                chi_u: 0.0,
                eta_l: eta,
                eta_u: eta,
                class_l: TailClass::AI,
                class_u: TailClass::AI,
                chi_l_se: None,
                chi_u_se: None,
                warnings: Vec::new(),
            }
        }
        CopulaKind::Gumbel(alpha) => {
            let a = alpha.value();
            // C(t, t) = t^{2^α}
            let dependent = a < 1.0;
            TailLimits {
                chi_l: 0.0,
                chi_u: 2.0 - 2f64.powf(a),
                eta_l: 2f64.powf(-a),
                eta_u: if dependent { 1.0 } else { 0.5 },
                class_l: TailClass::AI,
                class_u: if dependent { TailClass::AD } else { TailClass::AI },
                chi_l_se: None,
                chi_u_se: None,
                warnings: Vec::new(),
            }
        }
    }
}

/// `η` of an asymptotically independent model tail.
pub fn eta_independent(delta: f64, rho: f64) -> f64 {
    if delta > (1.0 + rho) / (3.0 + rho) {
        delta / (1.0 - delta)
    } else {
        (1.0 + rho) / 2.0
    }
}

/// Model limits with the default Monte Carlo stream.
///
/// ```
/// use asymtail::copula::ModelParams;
/// use asymtail::tail::{theoretical_tail, TailClass};
/// let p = ModelParams::new(0.45, 0.2, 0.0).unwrap();
/// let l = theoretical_tail(&p, 0);
/// assert_eq!(l.class_l, TailClass::AI);
/// assert!((l.eta_l - 0.45 / 0.55).abs() < 1e-15);
/// assert_eq!(l.eta_u, 0.5);
/// ```
pub fn theoretical_tail(p: &ModelParams, mc_budget: usize) -> TailLimits {
    theoretical_tail_with(p, mc_budget, &mut SeededGenerator::new(MC_SEED, 0))
}

/// Model limits drawing Monte Carlo variates from `g`.
pub fn theoretical_tail_with(p: &ModelParams, mc_budget: usize, g: &mut SeededGenerator) -> TailLimits {
    let (dl, du, rho) = (p.delta_l(), p.delta_u(), p.rho());
    let (class_l, class_u) = (class_of(dl), class_of(du));
    let mut warnings = Vec::new();
    let (mut chi_l, mut chi_u) = (0.0, 0.0);
    let (mut chi_l_se, mut chi_u_se) = (None, None);
    if class_l == TailClass::AD || class_u == TailClass::AD {
        if mc_budget < MIN_MC_BUDGET {
            warnings.push(format!(
                "Monte Carlo budget {mc_budget} is below {MIN_MC_BUDGET}; chi is imprecise"
            ));
        }
        let mc = dependent_chi(p, mc_budget.max(2), g);
        if class_l == TailClass::AD {
            chi_l = mc.lower.0;
            chi_l_se = Some(mc.lower.1);
        }
        if class_u == TailClass::AD {
            chi_u = mc.upper.0;
            chi_u_se = Some(mc.upper.1);
        }
    }
    let eta = |d: f64, class| match class {
        TailClass::AD => 1.0,
        TailClass::AI => eta_independent(d, rho),
    };
    TailLimits {
        chi_l: chi_l.clamp(0.0, 1.0),
        chi_u: chi_u.clamp(0.0, 1.0),
        eta_l: eta(dl, class_l),
        eta_u: eta(du, class_u),
        class_l,
        class_u,
        chi_l_se,
        chi_u_se,
        warnings,
    }
}

struct McChi {
    lower: (f64, f64),
    upper: (f64, f64),
}

/// Monte Carlo `E[min(A₁, A₂)]` for both tails from one set of draws.
/// Each mean comes with its standard error. A tail whose normalizer diverges
/// (δ ≤ 1/2) returns zeros.
fn dependent_chi(p: &ModelParams, n: usize, g: &mut SeededGenerator) -> McChi {
    let m = ModelMargin::from_params(p);
    let w = m.noise();
    let (dl, du, rho) = (p.delta_l(), p.delta_u(), p.rho());
    let rho_c = (1.0 - rho * rho).sqrt();
    let norm_l = w.exp_moment(-1.0 / dl).ok();
    let norm_u = w.exp_moment(1.0 / du).ok();
    let (mut sl, mut sl2, mut su, mut su2) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..n {
        let z1 = g.normal();
        let z2 = rho * z1 + rho_c * g.normal();
        let w1 = w.quantile_from_tails(norm_cdf(z1), norm_cdf(-z1));
        let w2 = w.quantile_from_tails(norm_cdf(z2), norm_cdf(-z2));
        if let Some(c) = norm_l {
            let v = (-w1.max(w2) / dl).exp() / c;
            sl += v;
            sl2 += v * v;
        }
        if let Some(c) = norm_u {
            let v = (w1.min(w2) / du).exp() / c;
            su += v;
            su2 += v * v;
        }
    }
    let nf = n as f64;
    let stats = |s: f64, s2: f64| {
        let mean = s / nf;
        let var = ((s2 / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
        (mean, (var / nf).sqrt())
    };
    McChi {
        lower: stats(sl, sl2),
        upper: stats(su, su2),
    }
}

/// One moving-window estimate with its delta-method envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiEstimate {
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
}

fn joint_exceedances(sample: &[(f64, f64)], t: f64, tail: Tail) -> impl Iterator<Item = bool> + '_ {
    sample.iter().map(move |&(a, b)| match tail {
        Tail::Lower => a < t && b < t,
        Tail::Upper => a > t && b > t,
    })
}

fn tail_mass(t: f64, tail: Tail) -> f64 {
    match tail {
        Tail::Lower => t,
        Tail::Upper => 1.0 - t,
    }
}

/// Moving-window estimates of `χ(t)` at every index.
///
/// The window at index `i` is `max(i − window, 1) ..= min(i + window, n)`.
/// The envelope is `estimate ± z·√(p̂(1 − p̂)/|J|)/t` (with `1 − t` in the
/// upper tail), where `p̂` is the joint exceedance proportion, truncated to `[0, 1]`.
///
/// ```
/// use asymtail::tail::{np_chi_moving, Tail};
/// let same: Vec<(f64, f64)> = (1..=100).map(|i| (i as f64 / 101.0, i as f64 / 101.0)).collect();
/// let est = np_chi_moving(&same, 0.5, 1000, Tail::Lower, 0.95).unwrap();
/// assert!((est[0].estimate - 50.0 / 50.0).abs() < 1e-12);
/// ```
pub fn np_chi_moving(
    sample: &[(f64, f64)],
    t: f64,
    window: usize,
    tail: Tail,
    confidence: f64,
) -> Result<Vec<ChiEstimate>> {
    check_level(t)?;
    if sample.is_empty() || window == 0 {
        return Err(Error::domain("moving window needs a nonempty sample and window ≥ 1"));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::domain(format!(
            "confidence must lie in (0, 1), got {confidence}"
        )));
    }
    let z = norm_quantile((1.0 + confidence) / 2.0);
    let scale = tail_mass(t, tail);
    let mut prefix = Vec::with_capacity(sample.len() + 1);
    prefix.push(0usize);
    for hit in joint_exceedances(sample, t, tail) {
        let last = *prefix.last().unwrap();
        prefix.push(last + hit as usize);
    }
    let n = sample.len();
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(window);
            let hi = (i + window).min(n - 1);
            let size = (hi - lo + 1) as f64;
            let p = (prefix[hi + 1] - prefix[lo]) as f64 / size;
            let estimate = p / scale;
            let half = z * (p * (1.0 - p) / size).sqrt() / scale;
            ChiEstimate {
                estimate,
                lo: (estimate - half).clamp(0.0, 1.0),
                hi: (estimate + half).clamp(0.0, 1.0),
            }
        })
        .collect())
}

/// Whole-sample estimate of `χ(t)`.
pub fn np_chi_global(sample: &[(f64, f64)], t: f64, tail: Tail) -> Result<f64> {
    check_level(t)?;
    if sample.is_empty() {
        return Err(Error::domain("empty sample"));
    }
    let hits = joint_exceedances(sample, t, tail).filter(|&h| h).count();
    Ok(hits as f64 / (sample.len() as f64 * tail_mass(t, tail)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::GumbelAlpha;
    use crate::quad::GaussLegendre;
    use crate::sim::{sample_gumbel, sample_model_uniform};
    use crate::special_fn::{bvn_cdf, Correlation};
    use proptest::prelude::*;

    /// `χ_U = ∫ P(W₁ > w, W₂ > w) e^{w/δ} / (δ E[e^{W/δ}]) dw`, the tail
    /// integral of `min(A₁, A₂)`, by quadrature. The lower tail follows by
    /// flipping the sign of `W`.
    fn chi_by_quadrature(p: &ModelParams, tail: Tail) -> f64 {
        let w = ModelMargin::from_params(p).noise();
        let (law, delta) = match tail {
            Tail::Upper => (w, p.delta_u()),
            Tail::Lower => (
                crate::dist::AsymLaplace::new(w.delta_u(), w.delta_l()).unwrap(),
                p.delta_l(),
            ),
        };
        let norm = law.exp_moment(1.0 / delta).unwrap();
        let f = |x: f64| {
            let z = norm_quantile(law.cdf(x).clamp(1e-300, 1.0 - 1e-16));
            let zs = -norm_quantile(law.sf(x).clamp(1e-300, 1.0));
            let z = if x > 0.0 { zs } else { z };
            bvn_cdf(-z, -z, p.rho()) * (x / delta).exp() / (delta * norm)
        };
        let gl = GaussLegendre::new(20);
        gl.integrate_composite(-60.0, 0.0, 400, f) + gl.integrate_composite(0.0, 60.0, 400, f)
    }

    #[test]
    fn case_one_eta_examples() {
        let p = ModelParams::new(0.3, 0.2, 0.5).unwrap();
        let l = theoretical_tail(&p, DEFAULT_MC_BUDGET);
        assert!((3.0f64 / 7.0 - 0.428_571).abs() < 1e-6);
        assert_eq!(l.eta_u, 0.75);
        assert_eq!(l.chi_u, 0.0);
        assert_eq!(l.class_u, TailClass::AI);
        let p = ModelParams::new(0.3, 0.45, 0.0).unwrap();
        assert!((theoretical_tail(&p, 0).eta_u - 0.818_181_818_181_818_2).abs() < 1e-15);
        assert!(theoretical_tail(&p, 0).warnings.is_empty());
    }

    #[test]
    fn case_two_matches_quadrature_oracle() {
        for &(dl, du, rho) in &[(0.7, 0.6, 0.5), (0.8, 0.75, -0.3), (0.6, 0.9, 0.8)] {
            let p = ModelParams::new(dl, du, rho).unwrap();
            let l = theoretical_tail(&p, DEFAULT_MC_BUDGET);
            for (tail, chi, se) in [(Tail::Lower, l.chi_l, l.chi_l_se), (Tail::Upper, l.chi_u, l.chi_u_se)] {
                let exact = chi_by_quadrature(&p, tail);
                let se = se.unwrap();
                assert!(
                    (chi - exact).abs() < 4.0 * se + 1e-3,
                    "{p} {tail:?}: mc {chi} ± {se}, quad {exact}"
                );
            }
            assert_eq!((l.eta_l, l.eta_u), (1.0, 1.0));
        }
    }

    #[test]
    fn case_two_invariant_to_doubling_budget() {
        let p = ModelParams::new(0.75, 0.65, 0.4).unwrap();
        let a = theoretical_tail_with(&p, 500_000, &mut SeededGenerator::new(1, 0));
        let b = theoretical_tail_with(&p, 1_000_000, &mut SeededGenerator::new(2, 0));
        let se = |x: Option<f64>, y: Option<f64>| (x.unwrap().powi(2) + y.unwrap().powi(2)).sqrt();
        assert!((a.chi_l - b.chi_l).abs() <= 2.0 * se(a.chi_l_se, b.chi_l_se));
        assert!((a.chi_u - b.chi_u).abs() <= 2.0 * se(a.chi_u_se, b.chi_u_se));
    }

    #[test]
    fn small_budget_warns() {
        let p = ModelParams::new(0.7, 0.2, 0.5).unwrap();
        let l = theoretical_tail(&p, 1000);
        assert_eq!(l.warnings.len(), 1);
        assert!(l.chi_l > 0.0 && l.chi_l < 1.0);
    }

    #[test]
    fn classification_follows_delta() {
        for d in [0.1, 0.5, 0.5 + 1e-12, 0.9] {
            let p = ModelParams::new(d, 1.0 - d, 0.2).unwrap();
            let l = theoretical_tail(&p, 2000);
            assert_eq!(l.class_l == TailClass::AD, d > 0.5);
            assert_eq!(l.class_u == TailClass::AD, 1.0 - d > 0.5);
        }
    }

    #[test]
    fn independence_curves() {
        let indep = CopulaKind::Gaussian(Correlation::new(0.0).unwrap());
        let ts = [0.01, 0.2, 0.5, 0.9];
        let s = chi_curves(&indep, &QuadratureSpec::default(), &ts).unwrap();
        for (i, &t) in ts.iter().enumerate() {
            assert!((s.chi_l_curve[i].1 - t).abs() < 1e-12);
            assert!((s.chi_u_curve[i].1 - (1.0 - t)).abs() < 1e-12);
        }
        assert!(chi_curves(&indep, &QuadratureSpec::default(), &[0.0]).is_err());
    }

    #[test]
    fn gaussian_curves_are_tail_symmetric() {
        let k = CopulaKind::Gaussian(Correlation::new(0.6).unwrap());
        let ts = [0.01, 0.05, 0.2, 0.4];
        let back: Vec<f64> = ts.iter().map(|t| 1.0 - t).collect();
        let q = QuadratureSpec::default();
        let a = chi_curves(&k, &q, &ts).unwrap();
        let b = chi_curves(&k, &q, &back).unwrap();
        for i in 0..ts.len() {
            assert!((a.chi_l_curve[i].1 - b.chi_u_curve[i].1).abs() < 1e-8);
        }
    }

    #[test]
    fn near_comonotone_model_has_full_lower_curve() {
        let k = CopulaKind::Model(ModelParams::new(0.99, 0.99, 0.99).unwrap());
        let s = chi_curves(&k, &QuadratureSpec::fast(), &[0.05, 0.3, 0.7]).unwrap();
        assert!(s.chi_l_curve.iter().all(|&(_, v)| v > 0.9), "{:?}", s.chi_l_curve);
    }

    #[test]
    fn model_curve_matches_monte_carlo() {
        let p = ModelParams::new(0.7, 0.2, 0.5).unwrap();
        let k = CopulaKind::Model(p);
        let s = chi_curves(&k, &QuadratureSpec::default(), &[0.05]).unwrap();
        let c = copula_value(&k, 0.05);
        assert!((s.chi_l_curve[0].1 - c / 0.05).abs() < 1e-15);
        let us = sample_model_uniform(&p, 1_000_000, &mut SeededGenerator::new(21, 0)).unwrap();
        let mc = np_chi_global(&us, 0.05, Tail::Lower).unwrap();
        assert!((mc - s.chi_l_curve[0].1).abs() < 0.01, "{mc} vs {}", s.chi_l_curve[0].1);
    }

    fn copula_value(k: &CopulaKind, t: f64) -> f64 {
        crate::copula::copula_cdf(k, &QuadratureSpec::default(), t, t).unwrap()
    }

    #[test]
    fn sampled_upper_chi_matches_model_curve() {
        let p = ModelParams::new(0.6, 0.7, 0.5).unwrap();
        let us = sample_model_uniform(&p, 100_000, &mut SeededGenerator::new(22, 0)).unwrap();
        let s = chi_curves(&CopulaKind::Model(p), &QuadratureSpec::default(), &[0.95]).unwrap();
        let mc = np_chi_global(&us, 0.95, Tail::Upper).unwrap();
        assert!((mc - s.chi_u_curve[0].1).abs() < 0.03, "{mc} vs {}", s.chi_u_curve[0].1);
    }

    #[test]
    fn gumbel_limits() {
        let k = CopulaKind::Gumbel(GumbelAlpha::new(0.5).unwrap());
        let l = tail_limits(&k, 0);
        assert!((l.chi_u - 0.585_786).abs() < 1e-6);
        assert_eq!(l.class_u, TailClass::AD);
        assert!((l.eta_l - 0.707_106_781_186_547_5).abs() < 1e-15);
    }

    #[test]
    fn global_estimator_examples() {
        let co: Vec<(f64, f64)> = (1..1000).map(|i| (i as f64 / 1000.0, i as f64 / 1000.0)).collect();
        assert!((np_chi_global(&co, 0.1, Tail::Lower).unwrap() - 0.99).abs() < 0.02);
        let mut g = SeededGenerator::new(30, 0);
        let indep: Vec<(f64, f64)> = (0..100_000).map(|_| (g.uniform(), g.uniform())).collect();
        assert!((np_chi_global(&indep, 0.5, Tail::Lower).unwrap() - 0.5).abs() < 0.01);
        let us = sample_gumbel(
            GumbelAlpha::new(0.5).unwrap(),
            100_000,
            &mut SeededGenerator::new(31, 0),
        )
        .unwrap();
        assert!((np_chi_global(&us, 0.98, Tail::Upper).unwrap() - 0.59).abs() < 0.05);
        assert!(np_chi_global(&[], 0.5, Tail::Upper).is_err());
    }

    #[test]
    fn moving_estimator_on_independent_sample() {
        let mut g = SeededGenerator::new(32, 0);
        let n = 100_000;
        let us: Vec<(f64, f64)> = (0..n).map(|_| (g.uniform(), g.uniform())).collect();
        let est = np_chi_moving(&us, 0.05, n, Tail::Lower, 0.95).unwrap();
        assert!((est[n / 2].estimate - 0.05).abs() < 0.01);
        assert!(est[0].lo <= est[0].estimate && est[0].estimate <= est[0].hi);
        let global = np_chi_global(&us, 0.05, Tail::Lower).unwrap();
        assert!((est[0].estimate - global).abs() < 1e-15);
    }

    #[test]
    fn moving_estimator_is_flat_on_stationary_data() {
        let p = ModelParams::new(0.7, 0.3, 0.5).unwrap();
        let us = sample_model_uniform(&p, 3000, &mut SeededGenerator::new(33, 0)).unwrap();
        let est = np_chi_moving(&us, 0.05, 500, Tail::Lower, 0.95).unwrap();
        let global = np_chi_global(&us, 0.05, Tail::Lower).unwrap();
        let inside = est.iter().filter(|e| e.lo <= global && global <= e.hi).count();
        assert!(inside as f64 >= 0.95 * est.len() as f64, "{inside}");
    }

    #[test]
    fn moving_estimator_rejects_bad_input() {
        let us = [(0.2, 0.3)];
        assert!(np_chi_moving(&us, 0.0, 5, Tail::Lower, 0.95).is_err());
        assert!(np_chi_moving(&us, 0.5, 0, Tail::Lower, 0.95).is_err());
        assert!(np_chi_moving(&[], 0.5, 5, Tail::Lower, 0.95).is_err());
        assert!(np_chi_moving(&us, 0.5, 5, Tail::Lower, 1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn model_curves_lie_in_unit_interval(
            dl in 0.05f64..0.95, du in 0.05f64..0.95, rho in -0.9f64..0.9, t in 0.01f64..0.99,
        ) {
            let k = CopulaKind::Model(ModelParams::new(dl, du, rho).unwrap());
            let s = chi_curves(&k, &QuadratureSpec::fast(), &[t]).unwrap();
            prop_assert!((0.0..=1.0).contains(&s.chi_l_curve[0].1));
            prop_assert!((0.0..=1.0).contains(&s.chi_u_curve[0].1));
        }

        #[test]
        fn eta_is_continuous_at_the_switch(rho in -0.99f64..0.99) {
            let d = (1.0 + rho) / (3.0 + rho);
            prop_assert!((eta_independent(d + 1e-12, rho) - eta_independent(d, rho)).abs() < 1e-9);
            prop_assert!(eta_independent(d, rho) > 0.0 && eta_independent(d, rho) <= 1.0);
        }

        #[test]
        fn moving_envelope_brackets_estimate(seed in any::<u64>(), t in 0.05f64..0.95, w in 1usize..50) {
            let mut g = SeededGenerator::new(seed, 0);
            let us: Vec<(f64, f64)> = (0..200).map(|_| { let a = g.uniform(); (a, (a + 0.1 * g.uniform()).min(0.999)) }).collect();
            for tail in [Tail::Lower, Tail::Upper] {
                for e in np_chi_moving(&us, t, w, tail, 0.9).unwrap() {
                    prop_assert!(e.lo <= e.estimate.min(1.0) + 1e-15 && e.hi >= e.estimate.min(1.0) - 1e-15);
                    prop_assert!(e.lo >= 0.0 && e.hi <= 1.0);
                }
            }
        }
    }
}
