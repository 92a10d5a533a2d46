//! Ground-truth oracles for the linear-chain CRF engine.
//!
//! Every inference quantity the engine computes is checked against an
//! independent brute-force implementation that enumerates complete label
//! paths (bounded so |labels|^length <= 4096), and the analytic gradient is
//! checked against central finite differences of the objective.

use clausewise::crf::{
    log_likelihood_and_gradient, marginals, viterbi_decode, CrfModel, Instance, LabelSet,
};
use clausewise::features::FeatureVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn label_set(n: usize) -> LabelSet {
    LabelSet::new((0..n).map(|i| format!("L{i}"))).unwrap()
}

const FEATURE_POOL: &[&str] = &[
    "f:alpha", "f:beta", "f:gamma", "f:delta", "f:epsilon", "f:zeta", "f:eta", "f:theta",
];

fn random_model(rng: &mut ChaCha8Rng, labels: usize, l2_lambda: f64) -> CrfModel {
    let mut model = CrfModel::zeros(label_set(labels), l2_lambda);
    for from in 0..labels {
        for to in 0..labels {
            model.set_transition(from, to, rng.gen_range(-2.0..2.0));
        }
    }
    for feature in FEATURE_POOL {
        for label in 0..labels {
            model.set_emission(feature, label, rng.gen_range(-2.0..2.0));
        }
    }
    model
}

fn random_features(rng: &mut ChaCha8Rng, length: usize) -> Vec<FeatureVector> {
    (0..length)
        .map(|_| {
            let mut fv = FeatureVector::new();
            let count = rng.gen_range(1..=3);
            for _ in 0..count {
                let name = FEATURE_POOL[rng.gen_range(0..FEATURE_POOL.len())];
                fv.set(name, rng.gen_range(-1.5..1.5f64));
            }
            if fv.is_empty() {
                fv.flag(FEATURE_POOL[0]);
            }
            fv
        })
        .collect()
}

/// Independent path scorer: emission dot products plus transitions, straight
/// from the model's public accessors.
fn path_score(model: &CrfModel, features: &[FeatureVector], path: &[usize]) -> f64 {
    let mut score = 0.0;
    for (fv, &label) in features.iter().zip(path) {
        for (name, value) in fv.iter() {
            score += model.emission(name, label) * value;
        }
    }
    for pair in path.windows(2) {
        score += model.transition(pair[0], pair[1]);
    }
    score
}

/// Every label path of the given length, by counting in base `labels`.
fn all_paths(labels: usize, length: usize) -> Vec<Vec<usize>> {
    let total = labels.pow(length as u32);
    let mut paths = Vec::with_capacity(total);
    for mut code in 0..total {
        let mut path = vec![0usize; length];
        for slot in path.iter_mut().rev() {
            *slot = code % labels;
            code /= labels;
        }
        paths.push(path);
    }
    paths
}

fn brute_force_log_z(model: &CrfModel, features: &[FeatureVector], labels: usize) -> f64 {
    let scores: Vec<f64> = all_paths(labels, features.len())
        .iter()
        .map(|p| path_score(model, features, p))
        .collect();
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln()
}

fn squared_norm(model: &CrfModel, labels: usize) -> f64 {
    let mut total = 0.0;
    for from in 0..labels {
        for to in 0..labels {
            total += model.transition(from, to).powi(2);
        }
    }
    for name in model.emission_feature_names() {
        for label in 0..labels {
            total += model.emission(name, label).powi(2);
        }
    }
    total
}

fn gold_instance(rng: &mut ChaCha8Rng, labels: usize, length: usize) -> Instance {
    let features = random_features(rng, length);
    let gold = (0..length)
        .map(|_| format!("L{}", rng.gen_range(0..labels)))
        .collect();
    Instance {
        features,
        labels: gold,
    }
}

fn gold_indices(instance: &Instance) -> Vec<usize> {
    instance
        .labels
        .iter()
        .map(|name| name[1..].parse::<usize>().unwrap())
        .collect()
}

#[test]
fn log_likelihood_matches_brute_force_partition_function() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for trial in 0..200 {
        let labels = rng.gen_range(2..=4usize);
        let mut length = rng.gen_range(1..=6usize);
        while (labels as u64).pow(length as u32) > 4096 {
            length -= 1;
        }
        let l2_lambda = if trial % 3 == 0 { 0.0 } else { 0.25 };
        let model = random_model(&mut rng, labels, l2_lambda);
        let instance = gold_instance(&mut rng, labels, length);

        let (ll, _) = log_likelihood_and_gradient(&model, &instance).unwrap();
        let gold = gold_indices(&instance);
        let expected = path_score(&model, &instance.features, &gold)
            - brute_force_log_z(&model, &instance.features, labels)
            - l2_lambda / 2.0 * squared_norm(&model, labels);
        assert!(
            (ll - expected).abs() < 1e-8,
            "trial {trial}: log-likelihood {ll} != brute force {expected}"
        );
    }
}

#[test]
fn gradient_matches_central_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let step = 1e-5;
    for trial in 0..50 {
        let labels = rng.gen_range(2..=3usize);
        let length = rng.gen_range(1..=5usize);
        let l2_lambda = if trial % 2 == 0 { 0.1 } else { 0.0 };
        let model = random_model(&mut rng, labels, l2_lambda);
        let instance = gold_instance(&mut rng, labels, length);

        let (_, grad) = log_likelihood_and_gradient(&model, &instance).unwrap();

        let check = |perturb: &dyn Fn(&mut CrfModel, f64), analytic: f64, what: &str| {
            let mut plus = model.clone();
            perturb(&mut plus, step);
            let mut minus = model.clone();
            perturb(&mut minus, -step);
            let (ll_plus, _) = log_likelihood_and_gradient(&plus, &instance).unwrap();
            let (ll_minus, _) = log_likelihood_and_gradient(&minus, &instance).unwrap();
            let fd = (ll_plus - ll_minus) / (2.0 * step);
            let tol = 1e-4 * fd.abs().max(analytic.abs()).max(1.0);
            assert!(
                (fd - analytic).abs() <= tol,
                "trial {trial} {what}: finite difference {fd} vs analytic {analytic}"
            );
        };

        for from in 0..labels {
            for to in 0..labels {
                let analytic = grad.transition(from, to);
                check(
                    &move |m: &mut CrfModel, h: f64| {
                        m.set_transition(from, to, m.transition(from, to) + h)
                    },
                    analytic,
                    &format!("transition {from}->{to}"),
                );
            }
        }
        // All model features plus any instance-only features carry gradient.
        let mut names: Vec<String> = model
            .emission_feature_names()
            .map(|s| s.to_string())
            .collect();
        for fv in &instance.features {
            for (name, _) in fv.iter() {
                if !names.iter().any(|n| n == name) {
                    names.push(name.to_string());
                }
            }
        }
        for name in &names {
            for label in 0..labels {
                let analytic = grad.emission(name, label);
                let feature = name.clone();
                check(
                    &move |m: &mut CrfModel, h: f64| {
                        m.set_emission(&feature, label, m.emission(&feature, label) + h)
                    },
                    analytic,
                    &format!("emission {name}/{label}"),
                );
            }
        }
    }
}

#[test]
fn uniform_single_position_case_is_closed_form() {
    let model = CrfModel::zeros(label_set(2), 0.0);
    let mut fv = FeatureVector::new();
    fv.flag("f:alpha");
    let instance = Instance {
        features: vec![fv],
        labels: vec!["L0".to_string()],
    };
    let (ll, grad) = log_likelihood_and_gradient(&model, &instance).unwrap();
    assert!((ll - (-(2.0f64.ln()))).abs() < 1e-12);
    assert!((grad.emission("f:alpha", 0) - 0.5).abs() < 1e-12);
    assert!((grad.emission("f:alpha", 1) + 0.5).abs() < 1e-12);
    assert_eq!(grad.transition(0, 1), 0.0);
}

#[test]
fn viterbi_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for trial in 0..500 {
        let labels = rng.gen_range(2..=4usize);
        let length = rng.gen_range(1..=6usize);
        let model = random_model(&mut rng, labels, 0.0);
        let features = random_features(&mut rng, length);

        let decoded = viterbi_decode(&model, &features);
        assert_eq!(decoded.len(), length);
        let decoded_score = path_score(&model, &features, &decoded);
        let best = all_paths(labels, length)
            .iter()
            .map(|p| path_score(&model, &features, p))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(
            (decoded_score - best).abs() < 1e-9,
            "trial {trial}: decoded score {decoded_score} below exhaustive best {best}"
        );
    }
}

#[test]
fn viterbi_ties_prefer_the_lower_label_index() {
    // All-zero weights make every path score zero; the documented tie-break
    // must pick label 0 everywhere.
    let model = CrfModel::zeros(label_set(3), 0.0);
    let features = random_features(&mut ChaCha8Rng::seed_from_u64(404), 5);
    let stripped: Vec<FeatureVector> = features
        .iter()
        .map(|_| {
            let mut fv = FeatureVector::new();
            fv.flag("f:unseen");
            fv
        })
        .collect();
    assert_eq!(viterbi_decode(&model, &stripped), vec![0, 0, 0, 0, 0]);

    // Single position: argmax of the emission scores.
    let mut model = CrfModel::zeros(label_set(3), 0.0);
    model.set_emission("f:alpha", 2, 4.0);
    let mut fv = FeatureVector::new();
    fv.flag("f:alpha");
    assert_eq!(viterbi_decode(&model, &[fv]), vec![2]);
}

#[test]
fn marginals_match_brute_force_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for trial in 0..200 {
        let labels = rng.gen_range(2..=4usize);
        let length = rng.gen_range(1..=5usize);
        let model = random_model(&mut rng, labels, 0.0);
        let features = random_features(&mut rng, length);

        let computed = marginals(&model, &features);
        assert_eq!(computed.len(), length);

        // Posterior over each position from complete path enumeration.
        let paths = all_paths(labels, length);
        let scores: Vec<f64> = paths
            .iter()
            .map(|p| path_score(&model, &features, p))
            .collect();
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        let mut expected = vec![vec![0.0f64; labels]; length];
        for (path, w) in paths.iter().zip(&weights) {
            for (t, &label) in path.iter().enumerate() {
                expected[t][label] += w / total;
            }
        }

        for t in 0..length {
            let sum: f64 = computed[t].iter().sum();
            assert!(
                (sum - 1.0).abs() < 1e-9,
                "trial {trial}: position {t} sums to {sum}"
            );
            for label in 0..labels {
                assert!(
                    (computed[t][label] - expected[t][label]).abs() < 1e-8,
                    "trial {trial}: marginal at ({t},{label}) {} vs {}",
                    computed[t][label],
                    expected[t][label]
                );
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Marginals are a probability distribution for arbitrary seeds/shapes.
    #[test]
    fn marginal_rows_always_normalize(seed in 0u64..10_000, labels in 2usize..6, length in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&mut rng, labels, 0.0);
        let features = random_features(&mut rng, length);
        for row in marginals(&model, &features) {
            let sum: f64 = row.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!(row.iter().all(|p| *p >= 0.0 && p.is_finite()));
        }
    }

    /// The decoded path never scores below the gold path: it is an argmax.
    #[test]
    fn viterbi_dominates_any_labeling(seed in 0u64..10_000, labels in 2usize..6, length in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&mut rng, labels, 0.0);
        let instance = gold_instance(&mut rng, labels, length);
        let decoded = viterbi_decode(&model, &instance.features);
        let decoded_score = path_score(&model, &instance.features, &decoded);
        let gold_score = path_score(&model, &instance.features, &gold_indices(&instance));
        prop_assert!(decoded_score >= gold_score - 1e-9);
    }

    /// The objective is finite and the gradient is zero-mean-consistent:
    /// summing the per-label emission gradient over labels at a feature equals
    /// the empirical minus expected *value* mass, which must be finite.
    #[test]
    fn objective_and_gradient_stay_finite(seed in 0u64..10_000, labels in 2usize..5, length in 1usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&mut rng, labels, 0.1);
        let instance = gold_instance(&mut rng, labels, length);
        let (ll, grad) = log_likelihood_and_gradient(&model, &instance).unwrap();
        prop_assert!(ll.is_finite());
        for from in 0..labels {
            for to in 0..labels {
                prop_assert!(grad.transition(from, to).is_finite());
            }
        }
    }
}
