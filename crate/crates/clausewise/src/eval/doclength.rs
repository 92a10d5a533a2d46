//! Governing-law extraction as a function of context length.
//!
//! For each window size `W`, every document contributes a stream of
//! exactly `W` body tokens containing its gold governing-law span at a
//! seeded uniformly random offset. A span tagger with deliberately local
//! features (the token and a one-to-two-token neighborhood, no position
//! information) is trained on the train split's windows and scored with
//! exact span matching on the test split's windows, so the only thing
//! that changes between curve points is how much surrounding text the
//! tagger must ignore.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use super::{format_score, Metrics};
use crate::corpus::{CorpusSplit, GoldLabels};
use crate::crf::{self, CrfError, Instance, TrainConfig};
use crate::doc::{tokens_in_reading_order, Document};
use crate::extract::answer_label_set;
use crate::features::{sanitize, FeatureVector};
use crate::splitter::{assemble_sections, SplitterError};

/// Scores and bookkeeping for one window size.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LengthPoint {
    pub window_tokens: usize,
    /// Training windows actually built.
    pub trained: usize,
    /// Test windows actually scored.
    pub evaluated: usize,
    /// Documents skipped across both splits: span longer than the
    /// window, or body shorter than the window.
    pub skipped: usize,
    pub metrics: Metrics,
}

/// One curve: a [`LengthPoint`] per requested window size.
#[derive(Debug, Clone, Serialize)]
pub struct LengthCurve {
    pub seed: u64,
    pub points: Vec<LengthPoint>,
}

#[derive(Debug, Error)]
pub enum LengthError {
    #[error("window sizes must be nonempty and strictly increasing")]
    BadWindows,
    #[error("window of {window} tokens leaves no usable {split} documents")]
    WindowTooSmall { window: usize, split: &'static str },
    #[error("document {doc_id} has no gold governing-law span inside its body sections")]
    MissingSpan { doc_id: String },
    #[error("corpus split index {index} is out of range for {len} documents")]
    IndexOutOfRange { index: usize, len: usize },
    #[error(transparent)]
    Sections(#[from] SplitterError),
    #[error(transparent)]
    Crf(#[from] CrfError),
}

/// A document reduced to its body token stream and the gold span's
/// position within it.
struct BodyStream {
    doc_index: usize,
    tokens: Vec<String>,
    span_first: usize,
    span_last: usize,
}

fn body_stream(
    doc_index: usize,
    doc: &Document,
    gold: &GoldLabels,
) -> Result<Option<BodyStream>, LengthError> {
    let Some(span) = gold.attributes.governing_law else {
        return Ok(None);
    };
    let sections = assemble_sections(doc, &gold.line_labels)?;
    let mut tokens = Vec::new();
    let mut position = HashMap::new();
    for section in sections.iter().filter(|s| s.section_type.is_body()) {
        for (text, &key) in
            section.clean_text.split_whitespace().zip(&section.token_provenance)
        {
            position.insert(key, tokens.len());
            tokens.push(text.to_string());
        }
    }
    let order = tokens_in_reading_order(doc);
    let in_body: Vec<usize> = order[span.first_token..=span.last_token]
        .iter()
        .filter_map(|key| position.get(key).copied())
        .collect();
    let (Some(&first), Some(&last)) = (in_body.iter().min(), in_body.iter().max()) else {
        return Err(LengthError::MissingSpan { doc_id: gold.doc_id.clone() });
    };
    if last - first + 1 != in_body.len() {
        // The span's body tokens must be consecutive once furniture
        // tokens are dropped; anything else is corrupt gold data.
        return Err(LengthError::MissingSpan { doc_id: gold.doc_id.clone() });
    }
    Ok(Some(BodyStream { doc_index, tokens, span_first: first, span_last: last }))
}

/// Local features for one window token: identity and a small
/// neighborhood, nothing positional.
fn window_token_features(tokens: &[&str], i: usize) -> FeatureVector {
    let mut fv = FeatureVector::new();
    fv.flag("win:bias");
    fv.flag(format!("win:lower={}", sanitize(&tokens[i].to_lowercase())));
    let neighbor = |offset: isize, name: &str, sentinel: &str| {
        let j = i as isize + offset;
        if j < 0 || j as usize >= tokens.len() {
            format!("win:{name}={sentinel}")
        } else {
            format!("win:{name}={}", sanitize(&tokens[j as usize].to_lowercase()))
        }
    };
    fv.flag(neighbor(-1, "prev1", "<bos>"));
    fv.flag(neighbor(-2, "prev2", "<bos>"));
    fv.flag(neighbor(1, "next1", "<eos>"));
    fv.flag(format!(
        "win:isdigit={}",
        tokens[i].chars().all(|c| c.is_ascii_digit()) && !tokens[i].is_empty()
    ));
    fv
}

/// A window of exactly `window` tokens around the span, with the gold
/// span expressed relative to the window. Returns `None` when the span
/// does not fit or the body is too short.
fn build_window(
    stream: &BodyStream,
    window: usize,
    seed: u64,
) -> Option<(Vec<FeatureVector>, usize, usize)> {
    let span_len = stream.span_last - stream.span_first + 1;
    if window < span_len || stream.tokens.len() < window {
        return None;
    }
    let lo = (stream.span_last + 1).saturating_sub(window);
    let hi = stream.span_first.min(stream.tokens.len() - window);
    // Seeded per (seed, window, document) so each window is independent
    // of evaluation order.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((window as u64) << 32) | stream.doc_index as u64);
    let start = rng.gen_range(lo..=hi);

    let slice: Vec<&str> =
        stream.tokens[start..start + window].iter().map(String::as_str).collect();
    let features = (0..window).map(|i| window_token_features(&slice, i)).collect();
    Some((features, stream.span_first - start, stream.span_last - start))
}

fn answer_labels(window: usize, first: usize, last: usize) -> Vec<String> {
    (0..window)
        .map(|i| {
            if i < first || i > last {
                "O"
            } else if i == first {
                "B-ans"
            } else {
                "I-ans"
            }
            .to_string()
        })
        .collect()
}

/// First `B-ans` run of a decoded window, as (first, last) positions.
fn decoded_span(decoded: &[usize]) -> Option<(usize, usize)> {
    let first = decoded.iter().position(|&l| l == 0)?;
    let mut last = first;
    while last + 1 < decoded.len() && decoded[last + 1] == 1 {
        last += 1;
    }
    Some((first, last))
}

/// Runs the window-size curve: train on `split.train` windows, score
/// exact span matches on `split.test` windows. Documents without a
/// governing-law span are skipped (counted per point); `seed` fixes the
/// window offsets, making the whole curve deterministic.
pub fn run_length_experiment(
    corpus: &[(Document, GoldLabels)],
    split: &CorpusSplit,
    window_sizes: &[usize],
    seed: u64,
    train_config: &TrainConfig,
) -> Result<LengthCurve, LengthError> {
    if window_sizes.is_empty() || window_sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LengthError::BadWindows);
    }
    let prepare = |indices: &[usize]| -> Result<Vec<BodyStream>, LengthError> {
        let mut streams = Vec::new();
        for &index in indices {
            let (doc, gold) = corpus
                .get(index)
                .ok_or(LengthError::IndexOutOfRange { index, len: corpus.len() })?;
            // A doc without the span falls outside this experiment's
            // premise; tolerate it as a per-point skip, not a hard error.
            if let Some(stream) = body_stream(index, doc, gold)? {
                streams.push(stream);
            }
        }
        Ok(streams)
    };
    let train_streams = prepare(&split.train)?;
    let test_streams = prepare(&split.test)?;

    let labels = answer_label_set();
    let mut points = Vec::new();
    for &window in window_sizes {
        let mut skipped =
            (split.train.len() - train_streams.len()) + (split.test.len() - test_streams.len());

        let mut instances = Vec::new();
        for stream in &train_streams {
            match build_window(stream, window, seed) {
                Some((features, first, last)) => instances.push(Instance {
                    labels: answer_labels(window, first, last),
                    features,
                }),
                None => skipped += 1,
            }
        }
        if instances.is_empty() {
            return Err(LengthError::WindowTooSmall { window, split: "train" });
        }
        let model = crf::train(&instances, &labels, train_config)?;

        let mut metrics = Metrics::default();
        let mut evaluated = 0;
        for stream in &test_streams {
            let Some((features, first, last)) = build_window(stream, window, seed) else {
                skipped += 1;
                continue;
            };
            evaluated += 1;
            match decoded_span(&crf::viterbi_decode(&model, &features)) {
                Some(span) if span == (first, last) => metrics.tp += 1,
                Some(_) => {
                    metrics.fp += 1;
                    metrics.missed += 1;
                }
                None => metrics.missed += 1,
            }
        }
        if evaluated == 0 {
            return Err(LengthError::WindowTooSmall { window, split: "test" });
        }
        points.push(LengthPoint {
            window_tokens: window,
            trained: instances.len(),
            evaluated,
            skipped,
            metrics,
        });
    }
    Ok(LengthCurve { seed, points })
}

impl LengthCurve {
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("window_tokens,precision,recall,f1,tp,fp,fn,trained,evaluated,skipped\n");
        for p in &self.points {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                p.window_tokens,
                format_score(p.metrics.precision()),
                format_score(p.metrics.recall()),
                format_score(p.metrics.f1()),
                p.metrics.tp,
                p.metrics.fp,
                p.metrics.missed,
                p.trained,
                p.evaluated,
                p.skipped
            )
            .expect("writing to a String cannot fail");
        }
        out
    }

    /// Two-column plot data: window size and F1.
    pub fn plot_data(&self) -> String {
        let mut out = String::from("window_tokens,f1\n");
        for p in &self.points {
            writeln!(out, "{},{}", p.window_tokens, format_score(p.metrics.f1()))
                .expect("writing to a String cannot fail");
        }
        out
    }

    pub fn f1_at(&self, window_tokens: usize) -> Option<f64> {
        self.points.iter().find(|p| p.window_tokens == window_tokens).map(|p| p.metrics.f1())
    }
}
