//! Kernel-weighted local likelihood for time-varying parameters.

use serde::{Deserialize, Serialize};

use crate::copula::{Copula, CopulaKind, ModelParams, QuadratureSpec};
use crate::error::{Error, Result};
use crate::special_fn::Correlation;
use crate::tail::{chi_lower, chi_upper};

use super::fit::{fit_weighted, param_values, CopulaFamily, FitOptions, Method};
use super::optim::NelderMeadOptions;
use super::PseudoSample;

/// Weight mass below which an index is flagged low-information.
pub const MIN_WEIGHT_MASS: f64 = 30.0;

/// Biweight kernel `ω_τ(h) = (1 − (h/τ)²)²` for `|h| < τ`, zero beyond.
///
/// ```
/// use asymtail::infer::biweight;
/// assert_eq!(biweight(0.0, 500.0), 1.0);
/// assert_eq!(biweight(500.0, 500.0), 0.0);
/// assert!((biweight(270.0, 500.0) - 0.5).abs() < 0.01);
/// ```
pub fn biweight(h: f64, tau: f64) -> f64 {
    let r = h / tau;
    let v = 1.0 - r * r;
    if v > 0.0 {
        v * v
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalFitOptions {
    pub tau: f64,
    /// Solve every `stride`-th index and interpolate between them.
    pub stride: usize,
    /// Levels `t` of the attached `χ_L(t)` and `χ_U(t)`.
    pub chi_levels: (f64, f64),
    pub fit: FitOptions,
    /// Simplex step for warm-started solves, on the transformed scale.
    pub warm_step: f64,
}

impl Default for LocalFitOptions {
    fn default() -> Self {
        Self {
            tau: 500.0,
            stride: 5,
            chi_levels: (0.05, 0.95),
            fit: FitOptions::default(),
            warm_step: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalFitRow {
    /// Time index of the point.
    pub index: usize,
    pub kind: CopulaKind,
    pub chi_l: f64,
    pub chi_u: f64,
    pub weight_mass: f64,
    /// Whether this index was optimized rather than interpolated.
    pub solved: bool,
    pub converged: bool,
    pub low_information: bool,
}

impl LocalFitRow {
    /// Space-separated flags: `interpolated`, `not-converged`, `low-information`.
    pub fn flags(&self) -> String {
        let mut f = Vec::new();
        if !self.solved {
            f.push("interpolated");
        }
        if !self.converged {
            f.push("not-converged");
        }
        if self.low_information {
            f.push("low-information");
        }
        f.join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalFitSeries {
    pub family: CopulaFamily,
    pub method: Method,
    pub tau: f64,
    pub stride: usize,
    pub chi_levels: (f64, f64),
    pub rows: Vec<LocalFitRow>,
}

/// Positions solved for a series of length `n`: `0, stride, 2·stride, …` and `n − 1`.
fn solved_positions(n: usize, stride: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).step_by(stride).collect();
    if *v.last().expect("n ≥ 1") != n - 1 {
        v.push(n - 1);
    }
    v
}

fn interpolate(family: CopulaFamily, a: &CopulaKind, b: &CopulaKind, w: f64) -> CopulaKind {
    let (x, y) = (param_values(a), param_values(b));
    let v: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p + w * (q - p)).collect();
    // convex combinations stay inside the parameter space
    match family {
        CopulaFamily::Model => CopulaKind::Model(ModelParams::new(v[0], v[1], v[2]).expect("convex combination")),
        CopulaFamily::Gaussian => CopulaKind::Gaussian(Correlation::new(v[0]).expect("convex combination")),
        CopulaFamily::Gumbel => CopulaKind::Gumbel(crate::copula::GumbelAlpha::new(v[0]).expect("convex combination")),
    }
}

/// For each solved position `i`, maximizes `Σ_j ω_τ(|j − i|) log L_j(θ_i)`,
/// where `j` and `i` are positions in the sample. Each solve after the first
/// starts from the previous solution.
///
/// ```no_run
/// use asymtail::copula::QuadratureSpec;
/// use asymtail::infer::{local_fit, CopulaFamily, LocalFitOptions, Method, PseudoSample};
/// use asymtail::sim::{rising_lower_schedule, sample_dynamic, SeededGenerator};
/// let us = sample_dynamic(&rising_lower_schedule(1500), &mut SeededGenerator::new(1, 0)).unwrap();
/// let s = asymtail::infer::pseudo_observations(&us).unwrap();
/// let series = local_fit(CopulaFamily::Model, &QuadratureSpec::fast(), &s, &Method::Full, &LocalFitOptions::default()).unwrap();
/// assert_eq!(series.rows.len(), 1500);
/// ```
pub fn local_fit(
    family: CopulaFamily,
    q: &QuadratureSpec,
    sample: &PseudoSample,
    method: &Method,
    opts: &LocalFitOptions,
) -> Result<LocalFitSeries> {
    if !(opts.tau > 0.0 && opts.tau.is_finite()) {
        return Err(Error::domain(format!("bandwidth must be positive, got {}", opts.tau)));
    }
    if opts.stride == 0 {
        return Err(Error::domain("stride must be at least 1"));
    }
    let (tl, tu) = opts.chi_levels;
    if !(tl > 0.0 && tl < 1.0 && tu > 0.0 && tu < 1.0) {
        return Err(Error::domain(format!(
            "chi levels must lie in (0, 1), got ({tl}, {tu})"
        )));
    }
    let n = sample.len();
    let positions = solved_positions(n.max(1), opts.stride);

    struct Solved {
        kind: CopulaKind,
        converged: bool,
    }
    let mut solved = Vec::with_capacity(positions.len());
    let mut previous: Option<CopulaKind> = None;
    for &i in &positions {
        let weights: Vec<f64> = (0..n).map(|j| biweight(j.abs_diff(i) as f64, opts.tau)).collect();
        let fopts = match previous {
            None => opts.fit.clone(),
            Some(k) => FitOptions {
                optimizer: NelderMeadOptions {
                    initial_step: opts.warm_step,
                    ..opts.fit.optimizer
                },
                multi_start: false,
                start: Some(k),
            },
        };
        let r = fit_weighted(family, q, sample, method, &fopts, Some(&weights))?;
        previous = Some(r.kind);
        solved.push(Solved {
            kind: r.kind,
            converged: r.converged,
        });
    }

    let mut rows = Vec::with_capacity(n);
    for w in 0..positions.len() {
        let (i, s) = (positions[w], &solved[w]);
        let push = |rows: &mut Vec<LocalFitRow>, pos: usize, kind: CopulaKind, solved_here: bool, converged: bool| {
            let c = Copula::new(&kind, q);
            let mass: f64 = (0..n).map(|j| biweight(j.abs_diff(pos) as f64, opts.tau)).sum();
            rows.push(LocalFitRow {
                index: sample.index()[pos],
                kind,
                chi_l: chi_lower(&c, tl),
                chi_u: chi_upper(&c, tu),
                weight_mass: mass,
                solved: solved_here,
                converged,
                low_information: mass < MIN_WEIGHT_MASS,
            });
        };
        push(&mut rows, i, s.kind, true, s.converged);
        if let Some(&next) = positions.get(w + 1) {
            let t = &solved[w + 1];
            for pos in i + 1..next {
                let frac = (pos - i) as f64 / (next - i) as f64;
                let kind = interpolate(family, &s.kind, &t.kind, frac);
                push(&mut rows, pos, kind, false, s.converged && t.converged);
            }
        }
    }
    Ok(LocalFitSeries {
        family,
        method: *method,
        tau: opts.tau,
        stride: opts.stride,
        chi_levels: opts.chi_levels,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infer::fit::fit;
    use crate::infer::pseudo_observations;
    use crate::sim::{sample_gaussian, SeededGenerator};
    use proptest::prelude::*;

    #[test]
    fn biweight_values() {
        assert_eq!(biweight(0.0, 500.0), 1.0);
        assert_eq!(biweight(500.0, 500.0), 0.0);
        assert_eq!(biweight(800.0, 500.0), 0.0);
        // (1 − 0.54²)² = 0.7084²
        assert!((biweight(270.0, 500.0) - 0.501_830_56).abs() < 1e-12);
    }

    #[test]
    fn solved_positions_cover_both_ends() {
        assert_eq!(solved_positions(11, 5), vec![0, 5, 10]);
        assert_eq!(solved_positions(12, 5), vec![0, 5, 10, 11]);
        assert_eq!(solved_positions(1, 5), vec![0]);
        assert_eq!(solved_positions(4, 1), vec![0, 1, 2, 3]);
    }

    fn gaussian_sample(n: usize, seed: u64) -> PseudoSample {
        let us = sample_gaussian(Correlation::new(0.4).unwrap(), n, &mut SeededGenerator::new(seed, 0)).unwrap();
        pseudo_observations(&us).unwrap()
    }

    #[test]
    fn huge_bandwidth_reproduces_global_fit() {
        let s = gaussian_sample(200, 3);
        let q = QuadratureSpec::default();
        let global = fit(CopulaFamily::Gaussian, &q, &s, &Method::Full, &FitOptions::default()).unwrap();
        let opts = LocalFitOptions {
            tau: 1e6,
            stride: 50,
            ..Default::default()
        };
        let series = local_fit(CopulaFamily::Gaussian, &q, &s, &Method::Full, &opts).unwrap();
        let g = param_values(&global.kind)[0];
        for row in &series.rows {
            let v = param_values(&row.kind)[0];
            assert!((v - g).abs() < 1e-3, "{} vs {g}", v);
        }
    }

    #[test]
    fn rows_interpolate_between_solved_indices() {
        let s = gaussian_sample(60, 4);
        let opts = LocalFitOptions {
            tau: 20.0,
            stride: 7,
            ..Default::default()
        };
        let series = local_fit(
            CopulaFamily::Gaussian,
            &QuadratureSpec::default(),
            &s,
            &Method::Full,
            &opts,
        )
        .unwrap();
        assert_eq!(series.rows.len(), 60);
        let r = |i: usize| param_values(&series.rows[i].kind)[0];
        assert!(series.rows[0].solved && series.rows[7].solved && !series.rows[3].solved);
        assert!((r(3) - (r(0) + 3.0 / 7.0 * (r(7) - r(0)))).abs() < 1e-12);
        assert!(series.rows.iter().all(|row| row.low_information));
        assert!(series.rows[3].flags().contains("interpolated"));
        assert!(series.rows.iter().enumerate().all(|(i, row)| row.index == i));
    }

    #[test]
    fn invalid_options_are_rejected() {
        let s = gaussian_sample(30, 5);
        let q = QuadratureSpec::default();
        let bad_tau = LocalFitOptions {
            tau: 0.0,
            ..Default::default()
        };
        assert!(local_fit(CopulaFamily::Gaussian, &q, &s, &Method::Full, &bad_tau).is_err());
        let bad_stride = LocalFitOptions {
            stride: 0,
            ..Default::default()
        };
        assert!(local_fit(CopulaFamily::Gaussian, &q, &s, &Method::Full, &bad_stride).is_err());
    }

    proptest! {
        #[test]
        fn biweight_is_a_bounded_even_kernel(h in -2e3f64..2e3, tau in 1.0f64..1e3) {
            let w = biweight(h, tau);
            prop_assert!((0.0..=1.0).contains(&w));
            prop_assert_eq!(w, biweight(-h, tau));
            prop_assert!(biweight(h.abs() + 1.0, tau) <= w);
        }
    }
}
