//! Censoring configurations and the region grammar of the three schemes.
//!
//! With `L_i = {u_i < t_L}`, `U_i = {u_i > t_U}` and `M_i` the closed middle
//! band, every point falls in exactly one cell. A cell fixes the likelihood
//! contribution of its points, and the cells of each scheme partition the
//! unit square as events, so their model probabilities sum to one.

use serde::{Deserialize, Serialize};

use crate::copula::{BivariateCopula, Copula, CopulaKind, QuadratureSpec};
use crate::error::{Error, Result};
use crate::quad::GaussLegendre;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Scheme {
    /// Joint-tail corners uncensored; edge points keep only their extreme coordinate.
    One,
    /// As `One`, plus partially censored edges; off-diagonal corners fully censored.
    Two,
    /// Every point with both coordinates extreme is uncensored.
    Three,
}

impl TryFrom<u8> for Scheme {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Scheme::One),
            2 => Ok(Scheme::Two),
            3 => Ok(Scheme::Three),
            _ => Err(Error::domain(format!("censoring scheme must be 1, 2 or 3, got {v}"))),
        }
    }
}

impl From<Scheme> for u8 {
    fn from(s: Scheme) -> u8 {
        match s {
            Scheme::One => 1,
            Scheme::Two => 2,
            Scheme::Three => 3,
        }
    }
}

/// Which margin claims the off-diagonal corners in scheme 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    #[default]
    Margin1Priority,
    Margin2Priority,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfig", into = "RawConfig")]
pub struct CensoringConfig {
    scheme: Scheme,
    t_l: f64,
    t_u: f64,
    tie_break: TieBreak,
}

#[derive(Serialize, Deserialize)]
struct RawConfig {
    scheme: Scheme,
    t_l: f64,
    t_u: f64,
    #[serde(default)]
    tie_break: TieBreak,
}

impl TryFrom<RawConfig> for CensoringConfig {
    type Error = Error;

    fn try_from(r: RawConfig) -> Result<Self> {
        Ok(Self::with_levels(r.scheme, r.t_l, r.t_u)?.with_tie_break(r.tie_break))
    }
}

impl From<CensoringConfig> for RawConfig {
    fn from(c: CensoringConfig) -> Self {
        RawConfig {
            scheme: c.scheme,
            t_l: c.t_l,
            t_u: c.t_u,
            tie_break: c.tie_break,
        }
    }
}

impl CensoringConfig {
    /// Symmetric levels `t_U = 1 − t_L`.
    pub fn new(scheme: Scheme, t_l: f64) -> Result<Self> {
        Self::with_levels(scheme, t_l, 1.0 - t_l)
    }

    pub fn with_levels(scheme: Scheme, t_l: f64, t_u: f64) -> Result<Self> {
        if !(t_l > 0.0 && t_l < t_u && t_u < 1.0) {
            return Err(Error::domain(format!(
                "censoring levels need 0 < t_l < t_u < 1, got t_l = {t_l}, t_u = {t_u}"
            )));
        }
        Ok(Self {
            scheme,
            t_l,
            t_u,
            tie_break: TieBreak::default(),
        })
    }

    pub fn with_tie_break(mut self, tie_break: TieBreak) -> Self {
        self.tie_break = tie_break;
        self
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn t_l(&self) -> f64 {
        self.t_l
    }

    pub fn t_u(&self) -> f64 {
        self.t_u
    }

    pub fn tie_break(&self) -> TieBreak {
        self.tie_break
    }

    /// Cell of the point `(u1, u2)`.
    pub(crate) fn cell(&self, u1: f64, u2: f64) -> Cell {
        let band = |u: f64| {
            if u < self.t_l {
                Band::Low
            } else if u > self.t_u {
                Band::High
            } else {
                Band::Mid
            }
        };
        let (b1, b2) = (band(u1), band(u2));
        use Band::*;
        match (b1, b2) {
            (Mid, Mid) => Cell::Bulk,
            (Low, Low) | (High, High) => Cell::Joint,
            (Low, High) | (High, Low) => match self.scheme {
                Scheme::Three => Cell::Joint,
                Scheme::Two if b1 == Low => Cell::CornerLowHigh,
                Scheme::Two => Cell::CornerHighLow,
                Scheme::One => match (self.tie_break, b1) {
                    (TieBreak::Margin1Priority, Low) => Cell::Low1,
                    (TieBreak::Margin1Priority, _) => Cell::High1,
                    (TieBreak::Margin2Priority, Low) => Cell::High2,
                    (TieBreak::Margin2Priority, _) => Cell::Low2,
                },
            },
            (_, Mid) => match (self.scheme, self.tie_break, b1) {
                (Scheme::One, TieBreak::Margin1Priority, Low) => Cell::Low1,
                (Scheme::One, TieBreak::Margin1Priority, _) => Cell::High1,
                _ => Cell::Edge1,
            },
            (Mid, _) => match (self.scheme, self.tie_break, b2) {
                (Scheme::One, TieBreak::Margin2Priority, Low) => Cell::Low2,
                (Scheme::One, TieBreak::Margin2Priority, _) => Cell::High2,
                _ => Cell::Edge2,
            },
        }
    }

    /// Public region label of the point `(u1, u2)`.
    pub fn region(&self, u1: f64, u2: f64) -> Region {
        self.cell(u1, u2).region()
    }

    /// Number of points in each region.
    pub fn count(&self, points: &[(f64, f64)]) -> RegionCounts {
        let mut c = RegionCounts::default();
        for &(a, b) in points {
            match self.region(a, b) {
                Region::A => c.a += 1,
                Region::B => c.b += 1,
                Region::C => c.c += 1,
                Region::D => c.d += 1,
                Region::Corner => c.corner += 1,
            }
        }
        c
    }

    /// Every cell the scheme can produce.
    fn cells(&self) -> Vec<Cell> {
        use Cell::*;
        match (self.scheme, self.tie_break) {
            (Scheme::Three, _) => vec![Joint, Edge1, Edge2, Bulk],
            (Scheme::Two, _) => vec![Joint, Edge1, Edge2, CornerLowHigh, CornerHighLow, Bulk],
            (Scheme::One, TieBreak::Margin1Priority) => vec![Joint, Low1, High1, Edge2, Bulk],
            (Scheme::One, TieBreak::Margin2Priority) => vec![Joint, Low2, High2, Edge1, Bulk],
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Band {
    Low,
    Mid,
    High,
}

/// Likelihood contribution types.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Cell {
    /// `c(u1, u2)`
    Joint,
    /// `∂1C(u1, t_U) − ∂1C(u1, t_L)`
    Edge1,
    /// `∂2C(t_U, u2) − ∂2C(t_L, u2)`
    Edge2,
    /// `1 − ∂1C(u1, t_L)`
    Low1,
    /// `∂1C(u1, t_U)`
    High1,
    /// `1 − ∂2C(t_L, u2)`
    Low2,
    /// `∂2C(t_U, u2)`
    High2,
    /// `t_L − C(t_L, t_U)`
    CornerLowHigh,
    /// `t_L − C(t_U, t_L)`
    CornerHighLow,
    /// `C(t_L, t_L) + C(t_U, t_U) − C(t_L, t_U) − C(t_U, t_L)`
    Bulk,
}

impl Cell {
    pub(crate) fn region(self) -> Region {
        match self {
            Cell::Joint => Region::A,
            Cell::Edge1 | Cell::Low1 | Cell::High1 => Region::B,
            Cell::Edge2 | Cell::Low2 | Cell::High2 => Region::C,
            Cell::CornerLowHigh | Cell::CornerHighLow => Region::Corner,
            Cell::Bulk => Region::D,
        }
    }

    pub(crate) fn needs_u1(self) -> bool {
        matches!(self, Cell::Joint | Cell::Edge1 | Cell::Low1 | Cell::High1)
    }

    pub(crate) fn needs_u2(self) -> bool {
        matches!(self, Cell::Joint | Cell::Edge2 | Cell::Low2 | Cell::High2)
    }
}

/// Region labels: `A` uncensored, `B`/`C` partially censored in margin 2/1,
/// `Corner` fully censored off-diagonal corners (scheme 2), `D` the bulk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    A,
    B,
    C,
    D,
    Corner,
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Region::A => "A",
            Region::B => "B",
            Region::C => "C",
            Region::D => "D",
            Region::Corner => "corner",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionCounts {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub d: usize,
    pub corner: usize,
}

impl RegionCounts {
    pub fn total(&self) -> usize {
        self.a + self.b + self.c + self.d + self.corner
    }
}

/// Depth of the logarithmic tail map: `u = t e^{−a}` with `a ≤ DEPTH`.
/// Deep enough that the neglected mass is below `1e-13`, shallow enough
/// that `1 − (1 − t) e^{−a}` stays below one.
const DEPTH: f64 = 30.0;

/// Substitution for an interval touching 0 or 1: returns nodes and weights
/// covering `[0, t]` (toward 0) or `[t, 1]` (toward 1), in `u`.
fn tail_nodes(t: f64, toward_one: bool, gl: &GaussLegendre, panels: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(panels * gl.len());
    let h = DEPTH / panels as f64;
    for p in 0..panels {
        for (x, w) in gl.nodes().iter().zip(gl.weights()) {
            let a = h * (p as f64 + 0.5 * (x + 1.0));
            let e = (-a).exp();
            let (u, jac) = if toward_one {
                let m = 1.0 - t;
                (1.0 - m * e, m * e)
            } else {
                (t * e, t * e)
            };
            out.push((u, w * 0.5 * h * jac));
        }
    }
    out
}

/// Model probability of each cell of `cfg`. Uncensored cells are integrated
/// over the density in two dimensions, partially censored cells integrate
/// their contribution in one dimension, and fully censored cells are closed
/// form. The values sum to one up to quadrature error.
pub fn region_probabilities(k: &CopulaKind, q: &QuadratureSpec, cfg: &CensoringConfig) -> Vec<(Region, f64)> {
    let c = Copula::new(k, q);
    let (tl, tu) = (cfg.t_l, cfg.t_u);
    let gl = GaussLegendre::new(12);
    let low = tail_nodes(tl, false, &gl, 6);
    let high = tail_nodes(tu, true, &gl, 6);
    let both: Vec<(f64, f64)> = low.iter().chain(&high).copied().collect();
    let cdf = |a, b| c.cdf(a, b);
    let square = |xs: &[(f64, f64)], ys: &[(f64, f64)]| {
        let mut s = 0.0;
        for &(u1, w1) in xs {
            for &(u2, w2) in ys {
                s += w1 * w2 * c.pdf(u1, u2);
            }
        }
        s
    };
    let line = |xs: &[(f64, f64)], f: &dyn Fn(f64) -> f64| xs.iter().map(|&(u, w)| w * f(u)).sum::<f64>();
    cfg.cells()
        .into_iter()
        .map(|cell| {
            let p = match cell {
                Cell::Joint => {
                    let diag = square(&low, &low) + square(&high, &high);
                    if cfg.scheme == Scheme::Three {
                        diag + square(&low, &high) + square(&high, &low)
                    } else {
                        diag
                    }
                }
                Cell::Edge1 => line(&both, &|u| c.partial1(u, tu) - c.partial1(u, tl)),
                Cell::Edge2 => line(&both, &|u| c.partial2(tu, u) - c.partial2(tl, u)),
                Cell::Low1 => line(&low, &|u| 1.0 - c.partial1(u, tl)),
                Cell::High1 => line(&high, &|u| c.partial1(u, tu)),
                Cell::Low2 => line(&low, &|u| 1.0 - c.partial2(tl, u)),
                Cell::High2 => line(&high, &|u| c.partial2(tu, u)),
                Cell::CornerLowHigh => tl - cdf(tl, tu),
                Cell::CornerHighLow => tl - cdf(tu, tl),
                Cell::Bulk => cdf(tl, tl) + cdf(tu, tu) - cdf(tl, tu) - cdf(tu, tl),
            };
            (cell.region(), p)
        })
        .collect()
}
