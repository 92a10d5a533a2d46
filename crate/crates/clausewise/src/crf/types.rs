//! Model and data types for the linear-chain CRF.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::features::FeatureVector;

/// An ordered set of distinct label names; index and name are a bijection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    labels: Vec<String>,
}

#[derive(Debug, Error)]
pub enum LabelSetError {
    #[error("label set is empty")]
    Empty,
    #[error("duplicate label {name:?}")]
    Duplicate { name: String },
}

impl LabelSet {
    pub fn new(
        labels: impl IntoIterator<Item = impl Into<String>>,
    ) -> Result<LabelSet, LabelSetError> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(LabelSetError::Empty);
        }
        for (i, name) in labels.iter().enumerate() {
            if labels[..i].contains(name) {
                return Err(LabelSetError::Duplicate { name: name.clone() });
            }
        }
        Ok(LabelSet { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.labels.get(index).map(String::as_str)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().map(String::as_str)
    }
}

/// A trained (or under-training) first-order linear-chain CRF.
///
/// Emission weights are stored per feature name as one weight per label;
/// transition weights are a dense label-by-label matrix in row-major order
/// (`from * len + to`).
#[derive(Debug, Clone, PartialEq)]
pub struct CrfModel {
    label_set: LabelSet,
    l2_lambda: f64,
    transitions: Vec<f64>,
    emissions: BTreeMap<String, Vec<f64>>,
    feature_fingerprint: Option<String>,
}

impl CrfModel {
    /// A model with every weight at zero.
    pub fn zeros(label_set: LabelSet, l2_lambda: f64) -> CrfModel {
        let n = label_set.len();
        CrfModel {
            label_set,
            l2_lambda,
            transitions: vec![0.0; n * n],
            emissions: BTreeMap::new(),
            feature_fingerprint: None,
        }
    }

    pub fn label_set(&self) -> &LabelSet {
        &self.label_set
    }

    pub fn l2_lambda(&self) -> f64 {
        self.l2_lambda
    }

    /// The feature-group fingerprint the model was trained with, if recorded.
    pub fn feature_fingerprint(&self) -> Option<&str> {
        self.feature_fingerprint.as_deref()
    }

    pub fn set_feature_fingerprint(&mut self, fingerprint: Option<String>) {
        self.feature_fingerprint = fingerprint;
    }

    pub fn transition(&self, from: usize, to: usize) -> f64 {
        self.transitions[from * self.label_set.len() + to]
    }

    pub fn set_transition(&mut self, from: usize, to: usize, weight: f64) {
        let n = self.label_set.len();
        self.transitions[from * n + to] = weight;
    }

    /// Emission weight for `(feature, label)`; unknown features weigh zero.
    pub fn emission(&self, feature: &str, label: usize) -> f64 {
        self.emissions
            .get(feature)
            .map(|row| row[label])
            .unwrap_or(0.0)
    }

    pub fn set_emission(&mut self, feature: &str, label: usize, weight: f64) {
        let n = self.label_set.len();
        self.emissions
            .entry(feature.to_string())
            .or_insert_with(|| vec![0.0; n])
            [label] = weight;
    }

    /// Feature names with stored emission rows, in sorted order.
    pub fn emission_feature_names(&self) -> impl Iterator<Item = &str> {
        self.emissions.keys().map(String::as_str)
    }

    /// Per-label emission row for a stored feature.
    pub fn emission_row(&self, feature: &str) -> Option<&[f64]> {
        self.emissions.get(feature).map(Vec::as_slice)
    }

    pub(crate) fn transitions_raw(&self) -> &[f64] {
        &self.transitions
    }

    pub(crate) fn from_parts(
        label_set: LabelSet,
        l2_lambda: f64,
        transitions: Vec<f64>,
        emissions: BTreeMap<String, Vec<f64>>,
        feature_fingerprint: Option<String>,
    ) -> CrfModel {
        debug_assert_eq!(transitions.len(), label_set.len() * label_set.len());
        CrfModel {
            label_set,
            l2_lambda,
            transitions,
            emissions,
            feature_fingerprint,
        }
    }

    /// Sum of squares of every stored weight.
    pub fn squared_weight_norm(&self) -> f64 {
        let mut total: f64 = self.transitions.iter().map(|w| w * w).sum();
        for row in self.emissions.values() {
            total += row.iter().map(|w| w * w).sum::<f64>();
        }
        total
    }
}

/// One labeled sequence: a feature vector and a gold label name per position.
#[derive(Debug, Clone)]
pub struct Instance {
    pub features: Vec<FeatureVector>,
    pub labels: Vec<String>,
}

/// Gradient of the regularized log-likelihood, mirroring the model layout.
#[derive(Debug, Clone)]
pub struct Gradient {
    n_labels: usize,
    transitions: Vec<f64>,
    emissions: BTreeMap<String, Vec<f64>>,
}

impl Gradient {
    pub(crate) fn zeros(n_labels: usize) -> Gradient {
        Gradient {
            n_labels,
            transitions: vec![0.0; n_labels * n_labels],
            emissions: BTreeMap::new(),
        }
    }

    pub fn transition(&self, from: usize, to: usize) -> f64 {
        self.transitions[from * self.n_labels + to]
    }

    pub fn emission(&self, feature: &str, label: usize) -> f64 {
        self.emissions
            .get(feature)
            .map(|row| row[label])
            .unwrap_or(0.0)
    }

    pub(crate) fn add_transition(&mut self, from: usize, to: usize, delta: f64) {
        self.transitions[from * self.n_labels + to] += delta;
    }

    pub(crate) fn add_emission(&mut self, feature: &str, label: usize, delta: f64) {
        let n = self.n_labels;
        self.emissions
            .entry(feature.to_string())
            .or_insert_with(|| vec![0.0; n])
            [label] += delta;
    }

    /// Largest absolute gradient coordinate.
    pub fn max_norm(&self) -> f64 {
        let mut best = self.transitions.iter().fold(0.0f64, |a, g| a.max(g.abs()));
        for row in self.emissions.values() {
            best = row.iter().fold(best, |a, g| a.max(g.abs()));
        }
        best
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// L2 regularization strength.
    pub l2_lambda: f64,
    /// Cap on optimizer iterations.
    pub max_iterations: usize,
    /// Stop once the gradient max-norm falls below this.
    pub convergence_tol: f64,
    /// Reserved for stochastic trainers; the batch trainer is deterministic
    /// and does not consume randomness.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            l2_lambda: 0.1,
            max_iterations: 200,
            convergence_tol: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum CrfError {
    #[error("sequence has {features} feature vectors but {labels} gold labels")]
    ShapeMismatch { features: usize, labels: usize },
    #[error("gold label {name:?} is not in the label set")]
    UnknownLabel { name: String },
    #[error("sequence is empty")]
    EmptySequence,
    #[error("no training sequences were provided")]
    NoData,
    #[error("objective became non-finite during training")]
    NonFinite,
}
