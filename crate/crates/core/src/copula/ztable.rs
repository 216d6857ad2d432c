//! Tabulated `G(ℓ) = Φ⁻¹(e^ℓ)` for `ℓ ≤ −1/2`.
//!
//! The normal scores of an asymmetric Laplace variable are `G` evaluated at a
//! log-probability that is linear in the argument on each side of zero, so one
//! parameter-free table serves every model. Cubic Hermite interpolation with
//! exact slopes `e^ℓ / φ(G(ℓ))`.

use std::sync::OnceLock;

use crate::special_fn::{lower_quantile, norm_pdf};

/// Clamp on log tail probabilities, `ln(1e-300)`.
pub(crate) const LN_MIN_PROB: f64 = -690.775_527_898_213_7;
const LO: f64 = -37.0;
const HI: f64 = -0.5;
const STEPS_PER_UNIT: f64 = 128.0;

struct Table {
    z: Vec<f64>,
    dz: Vec<f64>,
}

fn table() -> &'static Table {
    static TABLE: OnceLock<Table> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = ((HI - LO) * STEPS_PER_UNIT) as usize + 1;
        let h = 1.0 / STEPS_PER_UNIT;
        let mut z = Vec::with_capacity(n);
        let mut dz = Vec::with_capacity(n);
        for k in 0..n {
            let l = LO + h * k as f64;
            let v = lower_quantile(l.exp());
            z.push(v);
            // dG/dℓ, scaled to the unit cell
            dz.push(l.exp() / norm_pdf(v) * h);
        }
        Table { z, dz }
    })
}

/// `Φ⁻¹(e^ℓ)` for `ℓ ≤ ln(1/2)`, with `ℓ` clamped below at [`LN_MIN_PROB`].
/// Below the table the quantile is computed directly.
#[inline]
pub(crate) fn lower_score(l: f64) -> f64 {
    if l < LO {
        return lower_quantile(l.max(LN_MIN_PROB).exp());
    }
    let t = (l - LO) * STEPS_PER_UNIT;
    let k = t as usize;
    let tab = table();
    if k + 1 >= tab.z.len() {
        return lower_quantile(l.exp());
    }
    let s = t - k as f64;
    let (z0, z1) = (tab.z[k], tab.z[k + 1]);
    let (d0, d1) = (tab.dz[k], tab.dz[k + 1]);
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * z0 + h10 * d0 + h01 * z1 + h11 * d1
}

/// Forces construction of the table (for timing-sensitive callers).
pub(crate) fn warm() {
    let _ = table();
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_matches_direct_quantile() {
        let mut worst: f64 = 0.0;
        for k in 0..20_000 {
            let l = LO + (-std::f64::consts::LN_2 - LO) * (k as f64 + 0.37) / 20_000.0;
            let d = lower_quantile(l.exp());
            worst = worst.max((lower_score(l) - d).abs());
        }
        assert!(worst < 5e-10, "worst {worst}");
    }

    #[test]
    fn clamps_below() {
        assert_eq!(lower_score(-1000.0), lower_score(LN_MIN_PROB));
        assert!((lower_score(LN_MIN_PROB) - lower_quantile(1e-300)).abs() < 1e-12);
        assert!((lower_score(-100.0) - lower_quantile((-100f64).exp())).abs() < 1e-12);
    }
}
