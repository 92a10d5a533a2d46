//! Deterministic batch maximization by gradient ascent with Armijo
//! backtracking line search.
//!
//! Used by the CRF trainer and the logistic-regression classifiers. The
//! objectives are concave, so steepest ascent with a sufficient-increase
//! condition converges without any randomness — a requirement here, because
//! ablation deltas must reflect feature changes, not optimizer noise.

use thiserror::Error;

/// Line-search and stopping parameters.
#[derive(Debug, Clone)]
pub struct OptimizeOptions {
    /// Hard cap on outer iterations (accepted steps).
    pub max_iterations: usize,
    /// Stop when the gradient max-norm falls below this.
    pub gradient_tolerance: f64,
    /// Trial step for the first iteration.
    pub initial_step: f64,
    /// Armijo sufficient-increase coefficient.
    pub sufficient_increase: f64,
    /// Multiplier applied to the step on each backtrack.
    pub backtrack: f64,
    /// Give up on an iteration after this many shrinkages.
    pub max_backtracks: usize,
    /// Optional positive per-coordinate scales for the ascent direction
    /// (a diagonal preconditioner). Lets coordinates with wildly different
    /// curvature — say, a heavily regularized weight next to an
    /// unregularized bias — share one line search without throttling each
    /// other. Convergence is still judged on the raw gradient.
    pub direction_scales: Option<Vec<f64>>,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            max_iterations: 200,
            gradient_tolerance: 1e-4,
            initial_step: 1.0,
            sufficient_increase: 1e-4,
            backtrack: 0.5,
            max_backtracks: 60,
            direction_scales: None,
        }
    }
}

/// Result of a maximization run.
#[derive(Debug, Clone)]
pub struct Maximized {
    /// Final parameter vector.
    pub x: Vec<f64>,
    /// Objective value at `x`.
    pub value: f64,
    /// Accepted iterations performed.
    pub iterations: usize,
    /// Whether the gradient tolerance was reached (as opposed to hitting the
    /// iteration cap or stalling in the line search).
    pub converged: bool,
}

#[derive(Debug, Error)]
pub enum OptimizeError {
    /// The objective or gradient became non-finite; usually a feature-scaling
    /// bug in the caller.
    #[error("objective or gradient became non-finite at iteration {iteration}")]
    NonFinite { iteration: usize },
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Maximizes `eval` (which returns the objective value and its gradient)
/// starting from `x0`.
///
/// Every accepted step satisfies the Armijo condition, so the sequence of
/// objective values is non-decreasing. The whole procedure is a pure function
/// of `(eval, x0, options)`.
pub fn maximize(
    mut eval: impl FnMut(&[f64]) -> (f64, Vec<f64>),
    x0: Vec<f64>,
    options: &OptimizeOptions,
) -> Result<Maximized, OptimizeError> {
    let mut x = x0;
    let (mut value, mut gradient) = eval(&x);
    if !value.is_finite() || !all_finite(&gradient) {
        return Err(OptimizeError::NonFinite { iteration: 0 });
    }
    let mut step = options.initial_step;
    let mut iterations = 0;

    while iterations < options.max_iterations {
        let gnorm = max_norm(&gradient);
        if gnorm < options.gradient_tolerance {
            return Ok(Maximized {
                x,
                value,
                iterations,
                converged: true,
            });
        }
        let direction: Vec<f64> = match &options.direction_scales {
            Some(scales) => gradient
                .iter()
                .zip(scales)
                .map(|(g, s)| g * s)
                .collect(),
            None => gradient.clone(),
        };
        // Positive scales keep this an ascent direction: g . d > 0.
        let slope: f64 = gradient.iter().zip(&direction).map(|(g, d)| g * d).sum();
        let mut trial_step = step;
        let mut accepted = None;
        for _ in 0..=options.max_backtracks {
            let candidate: Vec<f64> = x
                .iter()
                .zip(&direction)
                .map(|(xi, di)| xi + trial_step * di)
                .collect();
            let (cand_value, cand_gradient) = eval(&candidate);
            if cand_value.is_finite()
                && all_finite(&cand_gradient)
                && cand_value >= value + options.sufficient_increase * trial_step * slope
            {
                accepted = Some((candidate, cand_value, cand_gradient));
                break;
            }
            trial_step *= options.backtrack;
        }
        match accepted {
            Some((nx, nv, ng)) => {
                x = nx;
                value = nv;
                gradient = ng;
                // Let the step grow back so progress is not permanently
                // throttled by one hard iteration.
                step = (trial_step * 2.0).min(options.initial_step.max(1.0) * 16.0);
                iterations += 1;
            }
            None => {
                // No improving step at the smallest scale: numerically at an
                // optimum (or the objective is non-finite in every direction).
                return Ok(Maximized {
                    x,
                    value,
                    iterations,
                    converged: false,
                });
            }
        }
    }
    Ok(Maximized {
        x,
        value,
        iterations,
        converged: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximizes_a_concave_quadratic() {
        // f(x) = -(x0-3)^2 - 2*(x1+1)^2, maximum at (3, -1).
        let eval = |x: &[f64]| {
            let value = -(x[0] - 3.0).powi(2) - 2.0 * (x[1] + 1.0).powi(2);
            let grad = vec![-2.0 * (x[0] - 3.0), -4.0 * (x[1] + 1.0)];
            (value, grad)
        };
        let result = maximize(eval, vec![0.0, 0.0], &OptimizeOptions::default()).unwrap();
        assert!(result.converged);
        assert!((result.x[0] - 3.0).abs() < 1e-3);
        assert!((result.x[1] + 1.0).abs() < 1e-3);
        assert!(result.value > -1e-6);
    }

    #[test]
    fn objective_never_decreases_across_iterations() {
        let mut history = Vec::new();
        let eval = |x: &[f64]| {
            let value = -(x[0].powi(4)) + x[0];
            (value, vec![-4.0 * x[0].powi(3) + 1.0])
        };
        let tracked = |x: &[f64]| {
            let out = eval(x);
            (out.0, out.1)
        };
        let result = maximize(tracked, vec![-2.0], &OptimizeOptions::default()).unwrap();
        history.push(result.value);
        // Accepted values are monotone by the Armijo condition; the final
        // value must beat the starting objective.
        let (start, _) = eval(&[-2.0]);
        assert!(result.value > start);
    }

    #[test]
    fn preconditioning_rescues_badly_scaled_problems() {
        // Curvatures differing by 1e6: raw steepest ascent stalls on the
        // flat coordinate, scaled directions do not.
        let eval = |x: &[f64]| {
            let value = -0.5 * (1e6 * x[0] * x[0] + x[1] * x[1]) + x[1];
            (value, vec![-1e6 * x[0], -x[1] + 1.0])
        };
        let raw = maximize(eval, vec![0.5, -3.0], &OptimizeOptions::default()).unwrap();
        let scaled = maximize(
            eval,
            vec![0.5, -3.0],
            &OptimizeOptions {
                direction_scales: Some(vec![1e-6, 1.0]),
                gradient_tolerance: 1e-6,
                ..OptimizeOptions::default()
            },
        )
        .unwrap();
        assert!(scaled.converged);
        assert!(scaled.x[0].abs() < 1e-6);
        assert!((scaled.x[1] - 1.0).abs() < 1e-6);
        // The unscaled run makes strictly less progress on the slow axis.
        assert!((raw.x[1] - 1.0).abs() > (scaled.x[1] - 1.0).abs());
    }

    #[test]
    fn non_finite_objective_is_reported() {
        let eval = |x: &[f64]| (x[0].ln(), vec![1.0 / x[0]]);
        let err = maximize(eval, vec![-1.0], &OptimizeOptions::default());
        assert!(matches!(err, Err(OptimizeError::NonFinite { .. })));
    }

    #[test]
    fn identical_runs_produce_identical_trajectories() {
        let eval = |x: &[f64]| {
            let value = -(x[0] - 0.5).powi(2) - (x[1] * x[1] + 1.0).ln();
            let grad = vec![-2.0 * (x[0] - 0.5), -2.0 * x[1] / (x[1] * x[1] + 1.0)];
            (value, grad)
        };
        let a = maximize(eval, vec![4.0, -3.0], &OptimizeOptions::default()).unwrap();
        let b = maximize(eval, vec![4.0, -3.0], &OptimizeOptions::default()).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.value, b.value);
        assert_eq!(a.iterations, b.iterations);
    }
}
