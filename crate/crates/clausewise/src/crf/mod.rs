//! Generic first-order linear-chain CRF.
//!
//! Training maximizes the L2-regularized conditional log-likelihood with
//! deterministic batch gradient ascent; inference is exact (forward–backward
//! for the partition function and marginals, Viterbi for decoding). The
//! engine is label-set-agnostic: the section splitter runs it over line
//! tags and the span extractors run it over token tags.

mod inference;
mod io;
mod train;
mod types;

pub use inference::{log_likelihood_and_gradient, marginals, viterbi_decode};
pub use io::{
    load_model, model_from_json, model_from_value, model_to_json, model_to_value, save_model,
    ModelIoError, MODEL_FORMAT_VERSION,
};
pub use train::train;
pub use types::{
    CrfError, CrfModel, Gradient, Instance, LabelSet, LabelSetError, TrainConfig,
};
