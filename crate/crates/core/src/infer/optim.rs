//! Nelder–Mead simplex minimization.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadOptions {
    /// Stop once `f_max − f_min ≤ tolerance · (1 + |f_min|)` over the simplex.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Offset of the initial vertices along each axis.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 2000,
            initial_step: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimizes `f` from `x0` with the standard coefficients
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
///
/// `f` may return `+∞` to reject a point. Ties are broken by vertex order,
/// so the search is deterministic.
///
/// ```
/// use asymtail::infer::{nelder_mead, NelderMeadOptions};
/// let r = nelder_mead(|x| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 2.0).powi(2), &[0.0, 0.0], &NelderMeadOptions::default());
/// assert!(r.converged);
/// assert!((r.x[0] - 1.0).abs() < 1e-3 && (r.x[1] + 2.0).abs() < 1e-3);
/// ```
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult {
    let n = x0.len();
    assert!(n >= 1, "need at least one coordinate");
    let mut evaluations = 0;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.initial_step;
        let v = eval(&x);
        simplex.push((x, v));
    }

    let mut iterations = 0;
    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[n].1);
        if best.is_finite() && worst - best <= opts.tolerance * (1.0 + best.abs()) {
            converged = true;
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let toward =
            |t: f64, from: &[f64]| -> Vec<f64> { centroid.iter().zip(from).map(|(c, x)| c + t * (x - c)).collect() };
        let worst_x = simplex[n].0.clone();
        let xr = toward(-1.0, &worst_x);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = toward(-2.0, &worst_x);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        // outside contraction when the reflection improved on the worst vertex
        let xc = toward(if fr < worst { -0.5 } else { 0.5 }, &worst_x);
        let fc = eval(&xc);
        if fc < fr.min(worst) {
            simplex[n] = (xc, fc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = x_best.iter().zip(&v.0).map(|(b, x)| b + 0.5 * (x - b)).collect();
            let fx = eval(&x);
            *v = (x, fx);
        }
    }
    let (x, value) = simplex.swap_remove(0);
    NelderMeadResult {
        x,
        value,
        iterations,
        evaluations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2)
    }

    #[test]
    fn rosenbrock_minimum() {
        let opts = NelderMeadOptions {
            tolerance: 1e-14,
            ..Default::default()
        };
        let r = nelder_mead(rosenbrock, &[-1.2, 1.0], &opts);
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4, "{:?}", r.x);
        assert!(r.evaluations > r.iterations);
    }

    #[test]
    fn one_dimensional() {
        let r = nelder_mead(|x| (x[0] - 0.3).powi(2) + 1.0, &[5.0], &NelderMeadOptions::default());
        assert!(r.converged);
        assert!((r.x[0] - 0.3).abs() < 1e-3);
        assert!((r.value - 1.0).abs() < 1e-7);
    }

    #[test]
    fn rejected_points_are_avoided() {
        // infeasible for x < 0
        let f = |x: &[f64]| {
            if x[0] < 0.0 {
                f64::INFINITY
            } else {
                (x[0] - 0.1).powi(2)
            }
        };
        let r = nelder_mead(f, &[1.0], &NelderMeadOptions::default());
        assert!(r.converged && r.x[0] >= 0.0 && (r.x[0] - 0.1).abs() < 1e-3);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let opts = NelderMeadOptions {
            max_iterations: 5,
            ..Default::default()
        };
        let r = nelder_mead(rosenbrock, &[-1.2, 1.0], &opts);
        assert!(!r.converged);
        assert_eq!(r.iterations, 5);
        assert!(r.value <= rosenbrock(&[-1.2, 1.0]));
    }

    #[test]
    fn nan_is_treated_as_rejection() {
        let f = |x: &[f64]| if x[0] > 2.0 { f64::NAN } else { (x[0] - 1.0).powi(2) };
        let r = nelder_mead(f, &[0.0], &NelderMeadOptions::default());
        assert!((r.x[0] - 1.0).abs() < 1e-3);
    }

    proptest! {
        #[test]
        fn quadratics_are_solved_deterministically(
            a in -5.0f64..5.0, b in -5.0f64..5.0, s in 0.5f64..4.0, x0 in -3.0f64..3.0,
        ) {
            let f = |x: &[f64]| (x[0] - a).powi(2) + s * (x[1] - b).powi(2);
            let r1 = nelder_mead(f, &[x0, 0.0], &NelderMeadOptions::default());
            let r2 = nelder_mead(f, &[x0, 0.0], &NelderMeadOptions::default());
            prop_assert_eq!(&r1, &r2);
            prop_assert!(r1.converged);
            prop_assert!(r1.value <= f(&[x0, 0.0]));
            prop_assert!((r1.x[0] - a).abs() < 1e-2 && (r1.x[1] - b).abs() < 1e-2);
        }
    }
}
