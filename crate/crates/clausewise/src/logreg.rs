//! L2-regularized binary logistic regression over sparse named features.
//!
//! Deterministic batch training (gradient ascent with backtracking line
//! search via [`crate::optimize`]); the bias term is excluded from the
//! regularizer so heavy regularization shrinks toward the base rate rather
//! than toward probability one half.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureVector;
use crate::optimize::{maximize, OptimizeError, OptimizeOptions};

/// A trained logistic model: sparse weights plus an unregularized bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    bias: f64,
    weights: BTreeMap<String, f64>,
}

impl LogisticModel {
    /// Raw decision-function value `bias + w . x`.
    pub fn decision_value(&self, features: &FeatureVector) -> f64 {
        let mut z = self.bias;
        for (name, value) in features.iter() {
            if let Some(w) = self.weights.get(name) {
                z += w * value;
            }
        }
        z
    }

    /// Probability of the positive class.
    pub fn score(&self, features: &FeatureVector) -> f64 {
        sigmoid(self.decision_value(features))
    }

    /// Positive iff the score reaches one half.
    pub fn predict(&self, features: &FeatureVector) -> bool {
        self.score(features) >= 0.5
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn weight(&self, feature: &str) -> f64 {
        self.weights.get(feature).copied().unwrap_or(0.0)
    }

    pub fn weights(&self) -> impl Iterator<Item = (&str, f64)> {
        self.weights.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogregConfig {
    pub l2_lambda: f64,
    pub max_iterations: usize,
    /// Gradient max-norm stopping threshold.
    pub convergence_tol: f64,
}

impl Default for LogregConfig {
    fn default() -> Self {
        LogregConfig {
            l2_lambda: 0.1,
            max_iterations: 300,
            convergence_tol: 1e-5,
        }
    }
}

#[derive(Debug, Error)]
pub enum LogregError {
    #[error("no training examples were provided")]
    NoData,
    #[error("objective became non-finite during training")]
    NonFinite,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

struct IndexedData {
    /// Per example: (feature id, value) pairs.
    rows: Vec<Vec<(u32, f64)>>,
    targets: Vec<bool>,
    names: Vec<String>,
}

fn index_examples(examples: &[(FeatureVector, bool)]) -> IndexedData {
    let mut name_set = BTreeSet::new();
    for (fv, _) in examples {
        for (name, _) in fv.iter() {
            name_set.insert(name.to_string());
        }
    }
    let names: Vec<String> = name_set.into_iter().collect();
    let rows = examples
        .iter()
        .map(|(fv, _)| {
            fv.iter()
                .map(|(name, value)| {
                    let id = names
                        .binary_search_by(|probe| probe.as_str().cmp(name))
                        .expect("feature was interned") as u32;
                    (id, value)
                })
                .collect()
        })
        .collect();
    IndexedData {
        rows,
        targets: examples.iter().map(|(_, y)| *y).collect(),
        names,
    }
}

/// Regularized log-likelihood and gradient over `[bias, weights...]`.
fn objective_and_gradient(params: &[f64], data: &IndexedData, lambda: f64) -> (f64, Vec<f64>) {
    let mut value = 0.0;
    let mut grad = vec![0.0; params.len()];
    for (row, &target) in data.rows.iter().zip(&data.targets) {
        let mut z = params[0];
        for &(id, x) in row {
            z += params[1 + id as usize] * x;
        }
        // y ln p + (1-y) ln(1-p) written via softplus for stability.
        value += if target { -softplus(-z) } else { -softplus(z) };
        let residual = (if target { 1.0 } else { 0.0 }) - sigmoid(z);
        grad[0] += residual;
        for &(id, x) in row {
            grad[1 + id as usize] += residual * x;
        }
    }
    if lambda != 0.0 {
        // The bias at params[0] is exempt.
        for (g, w) in grad.iter_mut().zip(params.iter()).skip(1) {
            *g -= lambda * w;
        }
        value -= lambda / 2.0 * params[1..].iter().map(|w| w * w).sum::<f64>();
    }
    (value, grad)
}

/// Trains a logistic model; deterministic given the example order and config.
pub fn train_logistic(
    examples: &[(FeatureVector, bool)],
    config: &LogregConfig,
) -> Result<LogisticModel, LogregError> {
    if examples.is_empty() {
        return Err(LogregError::NoData);
    }
    let data = index_examples(examples);
    let lambda = config.l2_lambda;
    // Precondition: a weight coordinate's curvature is roughly the data term
    // (at most n/4 for unit features) plus lambda, the bias sees only the
    // data term. Scaling directions by the inverse keeps one shared line
    // search from being throttled by the stiffest coordinate.
    let data_curvature = (examples.len() as f64 / 4.0).max(1.0);
    let mut scales = vec![1.0 / (data_curvature + lambda); 1 + data.names.len()];
    scales[0] = 1.0 / data_curvature;
    let options = OptimizeOptions {
        max_iterations: config.max_iterations,
        gradient_tolerance: config.convergence_tol,
        direction_scales: Some(scales),
        ..OptimizeOptions::default()
    };
    // Start the bias at the smoothed base-rate log-odds so the optimizer
    // refines an already-sane intercept instead of walking it from zero.
    let positives = examples.iter().filter(|(_, y)| *y).count();
    let base_rate = (positives as f64 + 1.0) / (examples.len() as f64 + 2.0);
    let mut start = vec![0.0; 1 + data.names.len()];
    start[0] = (base_rate / (1.0 - base_rate)).ln();
    let result = maximize(
        |params| objective_and_gradient(params, &data, lambda),
        start,
        &options,
    )
    .map_err(|e| match e {
        OptimizeError::NonFinite { .. } => LogregError::NonFinite,
    })?;
    let weights = data
        .names
        .iter()
        .enumerate()
        .filter(|(i, _)| result.x[1 + i] != 0.0)
        .map(|(i, name)| (name.clone(), result.x[1 + i]))
        .collect();
    Ok(LogisticModel {
        bias: result.x[0],
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fv(entries: &[(&str, f64)]) -> FeatureVector {
        let mut v = FeatureVector::new();
        for (name, value) in entries {
            v.set(*name, *value);
        }
        v
    }

    fn random_examples(rng: &mut ChaCha8Rng, count: usize) -> Vec<(FeatureVector, bool)> {
        let pool = ["a", "b", "c", "d", "e"];
        (0..count)
            .map(|_| {
                let mut v = FeatureVector::new();
                for name in pool {
                    if rng.gen_bool(0.6) {
                        v.set(name, rng.gen_range(-1.5..1.5f64));
                    }
                }
                if v.is_empty() {
                    v.flag("a");
                }
                (v, rng.gen_bool(0.5))
            })
            .collect()
    }

    #[test]
    fn gradient_matches_central_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let step = 1e-5;
        for trial in 0..50 {
            let count = rng.gen_range(1..=12);
            let examples = random_examples(&mut rng, count);
            let data = index_examples(&examples);
            let lambda = if trial % 2 == 0 { 0.2 } else { 0.0 };
            let params: Vec<f64> = (0..1 + data.names.len())
                .map(|_| rng.gen_range(-2.0..2.0))
                .collect();
            let (_, grad) = objective_and_gradient(&params, &data, lambda);
            for k in 0..params.len() {
                let mut plus = params.clone();
                plus[k] += step;
                let mut minus = params.clone();
                minus[k] -= step;
                let (vp, _) = objective_and_gradient(&plus, &data, lambda);
                let (vm, _) = objective_and_gradient(&minus, &data, lambda);
                let fd = (vp - vm) / (2.0 * step);
                let tol = 1e-4 * fd.abs().max(grad[k].abs()).max(1.0);
                assert!(
                    (fd - grad[k]).abs() <= tol,
                    "trial {trial} coordinate {k}: finite difference {fd} vs analytic {}",
                    grad[k]
                );
            }
        }
    }

    #[test]
    fn separable_toy_set_is_fit_exactly() {
        let examples = vec![
            (fv(&[("hot", 1.0)]), true),
            (fv(&[("hot", 1.0), ("mild", 0.5)]), true),
            (fv(&[("cold", 1.0)]), false),
            (fv(&[("cold", 1.0), ("mild", 0.5)]), false),
        ];
        let config = LogregConfig {
            l2_lambda: 0.01,
            ..LogregConfig::default()
        };
        let model = train_logistic(&examples, &config).unwrap();
        for (features, target) in &examples {
            assert_eq!(model.predict(features), *target);
        }
    }

    #[test]
    fn crushing_regularization_leaves_only_the_base_rate() {
        // 3 positives out of 4: the bias alone should carry the base rate,
        // since the regularizer flattens every feature weight.
        let examples = vec![
            (fv(&[("x", 1.0)]), true),
            (fv(&[("y", 1.0)]), true),
            (fv(&[("x", 1.0), ("y", 1.0)]), true),
            (fv(&[("z", 1.0)]), false),
        ];
        let config = LogregConfig {
            l2_lambda: 1e6,
            ..LogregConfig::default()
        };
        let model = train_logistic(&examples, &config).unwrap();
        for name in ["x", "y", "z"] {
            assert!(model.weight(name).abs() < 1e-3);
        }
        let base_rate = 0.75;
        assert!((model.score(&fv(&[("z", 1.0)])) - base_rate).abs() < 0.01);
    }

    #[test]
    fn training_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let examples = random_examples(&mut rng, 40);
        let a = train_logistic(&examples, &LogregConfig::default()).unwrap();
        let b = train_logistic(&examples, &LogregConfig::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn empty_training_set_is_rejected() {
        assert!(matches!(
            train_logistic(&[], &LogregConfig::default()),
            Err(LogregError::NoData)
        ));
    }
}
