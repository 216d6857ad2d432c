//! Full and censored log-likelihoods.
//!
//! A [`Plan`] fixes the cell of every point and the distinct uniform scores
//! that need a margin inversion. Pseudo-observations share the grid
//! `k/(n + 1)` across both margins, so a full-likelihood evaluation of the
//! model inverts its margin about `n` times rather than `2n`.

use crate::copula::{BivariateCopula, Copula, CopulaKind, ModelCopula, QuadratureSpec};
use crate::error::{Error, Result};

use super::censor::{Cell, CensoringConfig};
use super::fit::Method;
use super::PseudoSample;

const UNUSED: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Entry {
    /// Position in the sample.
    pos: usize,
    cell: Cell,
    slot1: u32,
    slot2: u32,
    weight: f64,
}

/// Per-sample precomputation shared by every evaluation of one objective.
#[derive(Debug, Clone)]
pub(crate) struct Plan {
    entries: Vec<Entry>,
    /// Sorted distinct scores that need coordinates.
    table: Vec<f64>,
    levels: Option<(f64, f64)>,
    points: Vec<(f64, f64)>,
    index: Vec<usize>,
}

/// Contribution that was not finite, by position in the sample.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Failure {
    pub pos: usize,
    pub cell: Cell,
}

impl Plan {
    /// `weights`, when given, has one entry per point; zero-weight points are skipped.
    pub(crate) fn new(sample: &PseudoSample, method: &Method, weights: Option<&[f64]>) -> Self {
        let cfg = match method {
            Method::Full => None,
            Method::Censored(c) => Some(*c),
        };
        let mut cells = Vec::with_capacity(sample.len());
        let mut table = Vec::with_capacity(sample.len());
        for (j, &(u1, u2)) in sample.points().iter().enumerate() {
            let w = weights.map_or(1.0, |w| w[j]);
            if w <= 0.0 {
                continue;
            }
            let cell = cfg.map_or(Cell::Joint, |c: CensoringConfig| c.cell(u1, u2));
            if cell.needs_u1() {
                table.push(u1);
            }
            if cell.needs_u2() {
                table.push(u2);
            }
            cells.push((j, cell, w));
        }
        table.sort_by(f64::total_cmp);
        table.dedup();
        let slot = |u: f64| table.binary_search_by(|v| v.total_cmp(&u)).expect("score was tabled") as u32;
        let entries = cells
            .into_iter()
            .map(|(pos, cell, weight)| {
                let (u1, u2) = sample.points()[pos];
                Entry {
                    pos,
                    cell,
                    slot1: if cell.needs_u1() { slot(u1) } else { UNUSED },
                    slot2: if cell.needs_u2() { slot(u2) } else { UNUSED },
                    weight,
                }
            })
            .collect();
        Self {
            entries,
            table,
            levels: cfg.map(|c| (c.t_l(), c.t_u())),
            points: sample.points().to_vec(),
            index: sample.index().to_vec(),
        }
    }

    /// Weighted log-likelihood, or the first point whose contribution is not finite.
    pub(crate) fn eval(&self, k: &CopulaKind, q: &QuadratureSpec) -> std::result::Result<f64, Failure> {
        match Copula::new(k, q) {
            Copula::Model(m) => self.accumulate(&XScale(&m)),
            other => self.accumulate(&UScale(&other)),
        }
    }

    /// As [`Plan::eval`] with the failure turned into a diagnostic.
    pub(crate) fn eval_checked(&self, k: &CopulaKind, q: &QuadratureSpec) -> Result<f64> {
        self.eval(k, q).map_err(|f| {
            let (u1, u2) = self.points[f.pos];
            Error::Likelihood {
                index: self.index[f.pos],
                u1,
                u2,
                region: f.cell.region().to_string(),
                params: k.to_string(),
            }
        })
    }

    fn accumulate<S: Scale>(&self, s: &S) -> std::result::Result<f64, Failure> {
        let coords: Vec<f64> = self.table.iter().map(|&u| s.coord(u)).collect();
        let fixed = self.levels.map(|(tl, tu)| Fixed::new(s, tl, tu));
        let mut acc = 0.0;
        for e in &self.entries {
            let a = if e.slot1 == UNUSED {
                0.0
            } else {
                coords[e.slot1 as usize]
            };
            let b = if e.slot2 == UNUSED {
                0.0
            } else {
                coords[e.slot2 as usize]
            };
            let v = match (e.cell, &fixed) {
                (Cell::Joint, _) => s.ln_pdf(a, b),
                (_, None) => unreachable!("censored cells need levels"),
                (Cell::Edge1, Some(f)) => (s.partial1(a, f.xu) - s.partial1(a, f.xl)).ln(),
                (Cell::Edge2, Some(f)) => (s.partial1(b, f.xu) - s.partial1(b, f.xl)).ln(),
                (Cell::Low1, Some(f)) => (-s.partial1(a, f.xl)).ln_1p(),
                (Cell::High1, Some(f)) => s.partial1(a, f.xu).ln(),
                (Cell::Low2, Some(f)) => (-s.partial1(b, f.xl)).ln_1p(),
                (Cell::High2, Some(f)) => s.partial1(b, f.xu).ln(),
                (Cell::CornerLowHigh, Some(f)) => f.corner_lh,
                (Cell::CornerHighLow, Some(f)) => f.corner_hl,
                (Cell::Bulk, Some(f)) => f.bulk,
            };
            if !v.is_finite() {
                return Err(Failure {
                    pos: e.pos,
                    cell: e.cell,
                });
            }
            acc += e.weight * v;
        }
        Ok(acc)
    }
}

/// Log-probabilities of the fully censored cells.
struct Fixed {
    xl: f64,
    xu: f64,
    bulk: f64,
    corner_lh: f64,
    corner_hl: f64,
}

impl Fixed {
    fn new<S: Scale>(s: &S, tl: f64, tu: f64) -> Self {
        let (xl, xu) = (s.coord(tl), s.coord(tu));
        let c_ll = s.cdf(xl, xl).min(tl);
        let c_uu = s.cdf(xu, xu).min(tu);
        let c_lu = s.cdf(xl, xu).min(tl);
        let c_ul = s.cdf(xu, xl).min(tl);
        Self {
            xl,
            xu,
            bulk: (c_ll + c_uu - c_lu - c_ul).ln(),
            corner_lh: (tl - c_lu).ln(),
            corner_hl: (tl - c_ul).ln(),
        }
    }
}

/// Copula evaluation in a coordinate chosen by the family. Exchangeability
/// lets every contribution use the first partial derivative only.
trait Scale {
    fn coord(&self, u: f64) -> f64;
    fn ln_pdf(&self, a: f64, b: f64) -> f64;
    fn partial1(&self, a: f64, b: f64) -> f64;
    fn cdf(&self, a: f64, b: f64) -> f64;
}

/// The model on the margin scale `x = F_X^{-1}(u)`.
struct XScale<'a>(&'a ModelCopula);

impl Scale for XScale<'_> {
    fn coord(&self, u: f64) -> f64 {
        self.0.to_x(u)
    }

    fn ln_pdf(&self, a: f64, b: f64) -> f64 {
        self.0.ln_pdf_x(a, b)
    }

    fn partial1(&self, a: f64, b: f64) -> f64 {
        self.0.partial1_x(a, b)
    }

    fn cdf(&self, a: f64, b: f64) -> f64 {
        self.0.joint_cdf(a, b)
    }
}

/// Closed-form families on the uniform scale.
struct UScale<'a>(&'a Copula);

impl Scale for UScale<'_> {
    fn coord(&self, u: f64) -> f64 {
        u
    }

    fn ln_pdf(&self, a: f64, b: f64) -> f64 {
        self.0.ln_pdf(a, b)
    }

    fn partial1(&self, a: f64, b: f64) -> f64 {
        self.0.partial1(a, b)
    }

    fn cdf(&self, a: f64, b: f64) -> f64 {
        self.0.cdf(a, b)
    }
}

/// `Σ log c(u_j1, u_j2)`.
///
/// ```
/// use asymtail::copula::{CopulaKind, QuadratureSpec};
/// use asymtail::infer::{full_loglik, PseudoSample};
/// use asymtail::special_fn::Correlation;
/// let s = PseudoSample::new(vec![(0.5, 0.5)]).unwrap();
/// let k = CopulaKind::Gaussian(Correlation::new(0.5).unwrap());
/// let l = full_loglik(&k, &QuadratureSpec::default(), &s).unwrap();
/// assert!((l - 0.143_841_036).abs() < 1e-8);
/// ```
pub fn full_loglik(k: &CopulaKind, q: &QuadratureSpec, sample: &PseudoSample) -> Result<f64> {
    loglik(k, q, sample, &Method::Full)
}

/// Censored log-likelihood under `cfg`.
pub fn censored_loglik(
    k: &CopulaKind,
    q: &QuadratureSpec,
    sample: &PseudoSample,
    cfg: &CensoringConfig,
) -> Result<f64> {
    loglik(k, q, sample, &Method::Censored(*cfg))
}

/// Log-likelihood for either method.
pub fn loglik(k: &CopulaKind, q: &QuadratureSpec, sample: &PseudoSample, method: &Method) -> Result<f64> {
    Plan::new(sample, method, None).eval_checked(k, q)
}
