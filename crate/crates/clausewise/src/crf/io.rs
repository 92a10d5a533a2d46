//! Versioned JSON serialization for CRF models.
//!
//! Layout (version 1):
//!
//! ```json
//! {
//!   "version": 1,
//!   "labels": ["B-clause", "..."],
//!   "l2_lambda": 0.1,
//!   "feature_fingerprint": "baseline+style",
//!   "transitions": [[0.0, ...], ...],
//!   "emissions": { "feature name": [0.0, ...], ... }
//! }
//! ```
//!
//! `transitions` is a labels-by-labels matrix (`transitions[from][to]`);
//! each `emissions` row holds one weight per label. Emission keys are sorted,
//! so serializing the same model always yields the same bytes. Loading
//! rejects unknown versions and malformed shapes.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crf::types::{CrfModel, LabelSet};

/// Current on-disk model format version.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    labels: Vec<String>,
    l2_lambda: f64,
    feature_fingerprint: Option<String>,
    transitions: Vec<Vec<f64>>,
    emissions: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("failed to read or write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("model file is not valid JSON: {message}")]
    Json { message: String },
    #[error("unsupported model format version {found} (this build reads version {MODEL_FORMAT_VERSION})")]
    UnknownVersion { found: u32 },
    #[error("malformed model file: {message}")]
    Invalid { message: String },
}

fn to_model_file(model: &CrfModel) -> ModelFile {
    let n = model.label_set().len();
    let transitions: Vec<Vec<f64>> = (0..n)
        .map(|from| (0..n).map(|to| model.transition(from, to)).collect())
        .collect();
    let emissions: BTreeMap<String, Vec<f64>> = model
        .emission_feature_names()
        .map(|name| {
            (
                name.to_string(),
                model.emission_row(name).expect("listed feature").to_vec(),
            )
        })
        .collect();
    ModelFile {
        version: MODEL_FORMAT_VERSION,
        labels: model.label_set().names().map(str::to_string).collect(),
        l2_lambda: model.l2_lambda(),
        feature_fingerprint: model.feature_fingerprint().map(str::to_string),
        transitions,
        emissions,
    }
}

/// Serializes a model to its canonical JSON text (pretty-printed, trailing
/// newline). The same model always produces the same bytes.
pub fn model_to_json(model: &CrfModel) -> String {
    let mut text =
        serde_json::to_string_pretty(&to_model_file(model)).expect("model serializes");
    text.push('\n');
    text
}

/// The model as a JSON value, for embedding in larger documents.
pub fn model_to_value(model: &CrfModel) -> serde_json::Value {
    serde_json::to_value(to_model_file(model)).expect("model serializes")
}

/// Parses and validates a model embedded in a larger JSON document.
pub fn model_from_value(value: serde_json::Value) -> Result<CrfModel, ModelIoError> {
    let file: ModelFile = serde_json::from_value(value).map_err(|e| ModelIoError::Json {
        message: e.to_string(),
    })?;
    validate_model_file(file)
}

/// Parses and validates a model from JSON text.
pub fn model_from_json(text: &str) -> Result<CrfModel, ModelIoError> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| ModelIoError::Json {
        message: e.to_string(),
    })?;
    validate_model_file(file)
}

fn validate_model_file(file: ModelFile) -> Result<CrfModel, ModelIoError> {
    if file.version != MODEL_FORMAT_VERSION {
        return Err(ModelIoError::UnknownVersion {
            found: file.version,
        });
    }
    let label_set = LabelSet::new(file.labels).map_err(|e| ModelIoError::Invalid {
        message: e.to_string(),
    })?;
    let n = label_set.len();
    if file.transitions.len() != n || file.transitions.iter().any(|row| row.len() != n) {
        return Err(ModelIoError::Invalid {
            message: format!("transitions must be a {n}x{n} matrix"),
        });
    }
    if !(file.l2_lambda.is_finite() && file.l2_lambda >= 0.0) {
        return Err(ModelIoError::Invalid {
            message: "l2_lambda must be finite and nonnegative".to_string(),
        });
    }
    let mut transitions = Vec::with_capacity(n * n);
    for row in &file.transitions {
        transitions.extend_from_slice(row);
    }
    if transitions.iter().any(|w| !w.is_finite()) {
        return Err(ModelIoError::Invalid {
            message: "transition weights must be finite".to_string(),
        });
    }
    for (name, row) in &file.emissions {
        if row.len() != n {
            return Err(ModelIoError::Invalid {
                message: format!("emission row for {name:?} must have {n} weights"),
            });
        }
        if row.iter().any(|w| !w.is_finite()) {
            return Err(ModelIoError::Invalid {
                message: format!("emission weights for {name:?} must be finite"),
            });
        }
    }
    Ok(CrfModel::from_parts(
        label_set,
        file.l2_lambda,
        transitions,
        file.emissions,
        file.feature_fingerprint,
    ))
}

pub fn save_model(path: impl AsRef<Path>, model: &CrfModel) -> Result<(), ModelIoError> {
    let path = path.as_ref();
    std::fs::write(path, model_to_json(model)).map_err(|source| ModelIoError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<CrfModel, ModelIoError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ModelIoError::Io {
        path: path.display().to_string(),
        source,
    })?;
    model_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crf::inference::viterbi_decode;
    use crate::features::FeatureVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample_model() -> CrfModel {
        let mut model =
            CrfModel::zeros(LabelSet::new(["a", "b", "c"]).unwrap(), 0.25);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for i in 0..3 {
            for j in 0..3 {
                model.set_transition(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        for name in ["w=alpha", "w=beta", "shape=Xx"] {
            for y in 0..3 {
                model.set_emission(name, y, rng.gen_range(-1.0..1.0));
            }
        }
        model.set_feature_fingerprint(Some("baseline+style".to_string()));
        model
    }

    fn random_batch(rng: &mut ChaCha8Rng, count: usize) -> Vec<Vec<FeatureVector>> {
        (0..count)
            .map(|_| {
                (0..rng.gen_range(1..=8))
                    .map(|_| {
                        let mut fv = FeatureVector::new();
                        for name in ["w=alpha", "w=beta", "shape=Xx"] {
                            if rng.gen_bool(0.5) {
                                fv.set(name, rng.gen_range(-1.0..1.0f64));
                            }
                        }
                        fv.set("w=alpha", fv.get("w=alpha") + 0.01);
                        fv
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn round_trip_preserves_model_and_decoding() {
        let model = sample_model();
        let text = model_to_json(&model);
        let loaded = model_from_json(&text).unwrap();
        assert_eq!(loaded, model);
        assert_eq!(loaded.feature_fingerprint(), Some("baseline+style"));

        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for features in random_batch(&mut rng, 25) {
            assert_eq!(
                viterbi_decode(&model, &features),
                viterbi_decode(&loaded, &features)
            );
        }
    }

    #[test]
    fn serialization_is_stable_across_calls() {
        let model = sample_model();
        assert_eq!(model_to_json(&model), model_to_json(&model));
    }

    #[test]
    fn unknown_versions_are_rejected() {
        let text = model_to_json(&sample_model()).replace("\"version\": 1", "\"version\": 2");
        assert!(matches!(
            model_from_json(&text),
            Err(ModelIoError::UnknownVersion { found: 2 })
        ));
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(matches!(
            model_from_json("not json"),
            Err(ModelIoError::Json { .. })
        ));
        // A short transition row must not pass shape validation.
        let mut bad = model_to_json(&sample_model());
        bad = bad.replacen('[', "[[],", 2).replacen("[[],", "[", 1);
        if model_from_json(&bad).is_ok() {
            panic!("mangled transitions were accepted");
        }
    }

    #[test]
    fn files_round_trip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let model = sample_model();
        save_model(&path, &model).unwrap();
        assert_eq!(load_model(&path).unwrap(), model);
        assert!(matches!(
            load_model(dir.path().join("missing.json")),
            Err(ModelIoError::Io { .. })
        ));
    }
}
