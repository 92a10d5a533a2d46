//! Batch CRF training: regularized maximum likelihood by gradient ascent
//! with backtracking line search.
//!
//! Features are interned into a dense parameter vector before optimization —
//! the per-iteration cost is then pure array arithmetic. Per-sequence
//! gradient contributions are computed in parallel over a *fixed* number of
//! chunks and summed in chunk order, so the result is bit-identical
//! regardless of how many worker threads happen to run.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::crf::inference::{ForwardBackward, Lattice};
use crate::crf::types::{CrfError, CrfModel, Instance, LabelSet, TrainConfig};
use crate::optimize::{maximize, OptimizeError, OptimizeOptions};

/// Fixed chunk count for parallel gradient accumulation. A constant (rather
/// than the thread count) keeps floating-point summation order stable across
/// machines.
const GRADIENT_CHUNKS: usize = 16;

struct IndexedSequence {
    /// Per position: (feature id, value) pairs.
    positions: Vec<Vec<(u32, f64)>>,
    gold: Vec<u32>,
}

/// Trains a CRF on gold-labeled sequences.
///
/// Deterministic given the data order and config: weights start at zero and
/// every optimizer step is derived from exact batch gradients.
pub fn train(
    instances: &[Instance],
    label_set: &LabelSet,
    config: &TrainConfig,
) -> Result<CrfModel, CrfError> {
    if instances.is_empty() {
        return Err(CrfError::NoData);
    }
    let n = label_set.len();
    for instance in instances {
        if instance.features.len() != instance.labels.len() {
            return Err(CrfError::ShapeMismatch {
                features: instance.features.len(),
                labels: instance.labels.len(),
            });
        }
        if instance.features.is_empty() {
            return Err(CrfError::EmptySequence);
        }
    }

    // Intern feature names in sorted order so parameter layout is stable.
    let mut name_set = BTreeSet::new();
    for instance in instances {
        for fv in &instance.features {
            for (name, _) in fv.iter() {
                name_set.insert(name.to_string());
            }
        }
    }
    let names: Vec<String> = name_set.into_iter().collect();
    let feature_id = |name: &str| -> u32 {
        names
            .binary_search_by(|probe| probe.as_str().cmp(name))
            .expect("feature was interned") as u32
    };

    let indexed: Vec<IndexedSequence> = instances
        .iter()
        .map(|instance| {
            let positions = instance
                .features
                .iter()
                .map(|fv| {
                    fv.iter()
                        .map(|(name, value)| (feature_id(name), value))
                        .collect()
                })
                .collect();
            let gold = instance
                .labels
                .iter()
                .map(|name| {
                    label_set
                        .index_of(name)
                        .map(|i| i as u32)
                        .ok_or_else(|| CrfError::UnknownLabel { name: name.clone() })
                })
                .collect::<Result<_, _>>()?;
            Ok(IndexedSequence { positions, gold })
        })
        .collect::<Result<_, CrfError>>()?;

    // Parameter layout: transitions (n*n), then one weight row per feature.
    let param_len = n * n + names.len() * n;
    let lambda = config.l2_lambda;
    let chunk_size = indexed.len().div_ceil(GRADIENT_CHUNKS);
    let chunks: Vec<&[IndexedSequence]> = indexed.chunks(chunk_size).collect();

    let eval = |weights: &[f64]| -> (f64, Vec<f64>) {
        let partials: Vec<(f64, Vec<f64>)> = chunks
            .par_iter()
            .map(|chunk| {
                let mut ll = 0.0;
                let mut grad = vec![0.0; param_len];
                for sequence in *chunk {
                    ll += accumulate_sequence(weights, sequence, n, &mut grad);
                }
                (ll, grad)
            })
            .collect();
        let mut ll = 0.0;
        let mut grad = vec![0.0; param_len];
        for (part_ll, part_grad) in partials {
            ll += part_ll;
            for (g, p) in grad.iter_mut().zip(&part_grad) {
                *g += p;
            }
        }
        if lambda != 0.0 {
            for (g, w) in grad.iter_mut().zip(weights) {
                *g -= lambda * w;
            }
            ll -= lambda / 2.0 * weights.iter().map(|w| w * w).sum::<f64>();
        }
        (ll, grad)
    };

    let options = OptimizeOptions {
        max_iterations: config.max_iterations,
        gradient_tolerance: config.convergence_tol,
        ..OptimizeOptions::default()
    };
    let result = maximize(eval, vec![0.0; param_len], &options).map_err(|e| match e {
        OptimizeError::NonFinite { .. } => CrfError::NonFinite,
    })?;

    let mut emissions: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (f, name) in names.iter().enumerate() {
        let row = &result.x[n * n + f * n..n * n + (f + 1) * n];
        if row.iter().any(|w| *w != 0.0) {
            emissions.insert(name.clone(), row.to_vec());
        }
    }
    Ok(CrfModel::from_parts(
        label_set.clone(),
        lambda,
        result.x[..n * n].to_vec(),
        emissions,
        None,
    ))
}

/// Adds one sequence's unregularized log-likelihood and gradient (over the
/// dense layout) and returns the log-likelihood term.
fn accumulate_sequence(
    weights: &[f64],
    sequence: &IndexedSequence,
    n: usize,
    grad: &mut [f64],
) -> f64 {
    let len = sequence.positions.len();
    let trans = &weights[..n * n];
    let mut emit = vec![0.0; len * n];
    for (t, position) in sequence.positions.iter().enumerate() {
        let row = &mut emit[t * n..(t + 1) * n];
        for &(fid, value) in position {
            let feature_row = &weights[n * n + fid as usize * n..n * n + (fid as usize + 1) * n];
            for (slot, w) in row.iter_mut().zip(feature_row) {
                *slot += w * value;
            }
        }
    }
    let lattice = Lattice {
        n_labels: n,
        len,
        emit,
        trans,
    };
    let fb = ForwardBackward::run(&lattice);

    let mut gold_score = 0.0;
    for (t, &y) in sequence.gold.iter().enumerate() {
        gold_score += lattice.emit[t * n + y as usize];
    }
    for pair in sequence.gold.windows(2) {
        gold_score += trans[pair[0] as usize * n + pair[1] as usize];
    }

    for pair in sequence.gold.windows(2) {
        grad[pair[0] as usize * n + pair[1] as usize] += 1.0;
    }
    for t in 1..len {
        for i in 0..n {
            for j in 0..n {
                grad[i * n + j] -= fb.pair_marginal(t, i, j);
            }
        }
    }
    for (t, position) in sequence.positions.iter().enumerate() {
        let gold = sequence.gold[t] as usize;
        for &(fid, value) in position {
            let base = n * n + fid as usize * n;
            grad[base + gold] += value;
            for y in 0..n {
                grad[base + y] -= value * fb.node_marginal(t, y);
            }
        }
    }
    gold_score - fb.log_z
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crf::inference::viterbi_decode;
    use crate::crf::io::model_to_json;
    use crate::features::FeatureVector;

    fn labels() -> LabelSet {
        LabelSet::new(["on", "off"]).unwrap()
    }

    /// Sequences where a single feature spells out the gold label.
    fn separable_data() -> Vec<Instance> {
        let patterns: &[&[&str]] = &[
            &["on", "on", "off"],
            &["off", "off", "on", "on"],
            &["on"],
            &["off", "on", "off", "off"],
        ];
        patterns
            .iter()
            .map(|seq| Instance {
                features: seq
                    .iter()
                    .map(|label| {
                        let mut fv = FeatureVector::new();
                        fv.flag(format!("is:{label}"));
                        fv
                    })
                    .collect(),
                labels: seq.iter().map(|s| s.to_string()).collect(),
            })
            .collect()
    }

    #[test]
    fn separable_data_is_fit_exactly() {
        let data = separable_data();
        let model = train(&data, &labels(), &TrainConfig::default()).unwrap();
        for instance in &data {
            let decoded = viterbi_decode(&model, &instance.features);
            let decoded_names: Vec<&str> = decoded
                .iter()
                .map(|&i| model.label_set().name(i).unwrap())
                .collect();
            let gold: Vec<&str> = instance.labels.iter().map(String::as_str).collect();
            assert_eq!(decoded_names, gold);
        }
    }

    #[test]
    fn overwhelming_regularization_pins_weights_at_zero() {
        let data = separable_data();
        let config = TrainConfig {
            l2_lambda: 1e6,
            ..TrainConfig::default()
        };
        let model = train(&data, &labels(), &config).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!(model.transition(i, j).abs() < 1e-3);
            }
        }
        for name in model.emission_feature_names() {
            for y in 0..2 {
                assert!(model.emission(name, y).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn training_twice_yields_byte_identical_models() {
        let data = separable_data();
        let a = train(&data, &labels(), &TrainConfig::default()).unwrap();
        let b = train(&data, &labels(), &TrainConfig::default()).unwrap();
        assert_eq!(model_to_json(&a), model_to_json(&b));
    }

    #[test]
    fn bad_training_data_is_rejected() {
        assert!(matches!(
            train(&[], &labels(), &TrainConfig::default()),
            Err(CrfError::NoData)
        ));
        let empty_seq = vec![Instance {
            features: vec![],
            labels: vec![],
        }];
        assert!(matches!(
            train(&empty_seq, &labels(), &TrainConfig::default()),
            Err(CrfError::EmptySequence)
        ));
        let unknown = vec![Instance {
            features: vec![FeatureVector::new()],
            labels: vec!["mystery".to_string()],
        }];
        assert!(matches!(
            train(&unknown, &labels(), &TrainConfig::default()),
            Err(CrfError::UnknownLabel { .. })
        ));
    }
}
