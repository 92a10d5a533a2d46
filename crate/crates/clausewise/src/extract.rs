//! Contract-attribute extraction over split sections.
//!
//! Each attribute is answered in two stages. A per-attribute relevance
//! classifier first picks out the few clause/sub-clause sections worth
//! reading; then either a token-level tagger locates the answer span
//! (expiration date, governing law) or a binary classifier answers yes/no
//! (termination for convenience, anti-assignment). Working from sections
//! rather than raw pages keeps page furniture out of the answer text, so
//! an extracted span can never contain a page number even when the source
//! sentence was interrupted by a page break.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{GoldAttributes, GoldLabels, TokenSpan};
use crate::crf::{self, CrfError, CrfModel, LabelSet, TrainConfig};
use crate::doc::{tokens_in_reading_order, Document, LineRef};
use crate::features::{
    sanitize, section_token_features, FeatureConfig, FeatureVector, TokenFeatureError,
};
use crate::logreg::{train_logistic, LogisticModel, LogregConfig, LogregError};
use crate::splitter::{assemble_sections, Section, SplitterError};

/// The contract attributes the toolkit extracts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribute {
    ExpirationDate,
    GoverningLaw,
    TerminationForConvenience,
    AntiAssignment,
}

/// How an attribute is answered: by locating a text span, or yes/no.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttributeKind {
    Entity,
    Boolean,
}

impl Attribute {
    pub const ALL: [Attribute; 4] = [
        Attribute::ExpirationDate,
        Attribute::GoverningLaw,
        Attribute::TerminationForConvenience,
        Attribute::AntiAssignment,
    ];

    pub fn kind(&self) -> AttributeKind {
        match self {
            Attribute::ExpirationDate | Attribute::GoverningLaw => AttributeKind::Entity,
            Attribute::TerminationForConvenience | Attribute::AntiAssignment => {
                AttributeKind::Boolean
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Attribute::ExpirationDate => "expiration_date",
            Attribute::GoverningLaw => "governing_law",
            Attribute::TerminationForConvenience => "termination_for_convenience",
            Attribute::AntiAssignment => "anti_assignment",
        }
    }

    pub fn parse(s: &str) -> Option<Attribute> {
        Attribute::ALL.into_iter().find(|a| a.name() == s)
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An extracted answer span inside one section's clean token stream.
#[derive(Debug, Clone, PartialEq)]
pub struct AnswerSpan {
    /// Index into the section list the prediction was made over.
    pub section_index: usize,
    /// First token of the span in the section's clean token stream.
    pub first_token: usize,
    /// Last token (inclusive).
    pub last_token: usize,
    /// The span's text: the covered tokens joined with single spaces.
    pub text: String,
}

/// One attribute's answer for one document.
///
/// Entity attributes carry a span unless no relevant section was found;
/// boolean attributes always carry an answer (defaulting to `false` when
/// no relevant section was found).
#[derive(Debug, Clone, PartialEq)]
pub struct AttributePrediction {
    pub attribute: Attribute,
    pub span: Option<AnswerSpan>,
    pub answer: Option<bool>,
    /// Span score (mean in-answer marginal) for entity attributes;
    /// positive-class probability for boolean attributes.
    pub confidence: f64,
    pub no_relevant_section: bool,
}

impl AttributePrediction {
    /// The "no relevant section found" outcome: entity attributes carry no
    /// span; boolean attributes answer No at even odds.
    pub fn no_relevant(attribute: Attribute) -> AttributePrediction {
        let answer = match attribute.kind() {
            AttributeKind::Entity => None,
            AttributeKind::Boolean => Some(false),
        };
        AttributePrediction {
            attribute,
            span: None,
            answer,
            confidence: match attribute.kind() {
                AttributeKind::Entity => 0.0,
                AttributeKind::Boolean => 0.5,
            },
            no_relevant_section: true,
        }
    }
}

/// One line of the prediction output stream (JSON per line).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub doc_id: String,
    pub attribute: Attribute,
    pub span_text: Option<String>,
    pub answer: Option<bool>,
    pub confidence: f64,
    pub no_relevant_section: bool,
}

impl PredictionRecord {
    pub fn new(doc_id: impl Into<String>, prediction: &AttributePrediction) -> PredictionRecord {
        PredictionRecord {
            doc_id: doc_id.into(),
            attribute: prediction.attribute,
            span_text: prediction.span.as_ref().map(|s| s.text.clone()),
            answer: prediction.answer,
            confidence: prediction.confidence,
            no_relevant_section: prediction.no_relevant_section,
        }
    }
}

/// Tags for the answer-span tagger, in model label order.
pub const ANSWER_TAGS: [&str; 3] = ["B-ans", "I-ans", "O"];

/// Index of the `O` tag in [`ANSWER_TAGS`].
const OUTSIDE_ANSWER: usize = 2;

/// The three-tag label set answer-span models are trained over.
pub fn answer_label_set() -> LabelSet {
    LabelSet::new(ANSWER_TAGS).expect("answer tags are distinct")
}

/// Per-attribute relevance classifiers over section-level features.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceModel {
    models: BTreeMap<Attribute, LogisticModel>,
}

impl RelevanceModel {
    pub fn new(models: BTreeMap<Attribute, LogisticModel>) -> RelevanceModel {
        RelevanceModel { models }
    }

    pub fn model_for(&self, attribute: Attribute) -> Option<&LogisticModel> {
        self.models.get(&attribute)
    }

    pub fn models(&self) -> impl Iterator<Item = (Attribute, &LogisticModel)> {
        self.models.iter().map(|(a, m)| (*a, m))
    }
}

/// All trained extractor models for the four attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct Extractors {
    pub relevance: RelevanceModel,
    /// Answer-span taggers, keyed by entity attribute.
    pub entity: BTreeMap<Attribute, CrfModel>,
    /// Yes/no classifiers, keyed by boolean attribute.
    pub boolean: BTreeMap<Attribute, LogisticModel>,
}

/// Errors from running trained extractors.
#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("model mismatch: {0}")]
    ModelMismatch(String),
    #[error(transparent)]
    Feature(#[from] TokenFeatureError),
}

/// Errors from extractor training.
#[derive(Debug, Error)]
pub enum TrainExtractorsError {
    #[error(
        "document {doc_id}: the gold {attribute} span does not fall inside \
         any clause or sub-clause section"
    )]
    UnresolvableSpan { doc_id: String, attribute: Attribute },
    #[error("{attribute} is a {actual} attribute; this operation trains {expected} models")]
    WrongKind {
        attribute: Attribute,
        expected: &'static str,
        actual: &'static str,
    },
    #[error(transparent)]
    Split(#[from] SplitterError),
    #[error(transparent)]
    Crf(#[from] CrfError),
    #[error(transparent)]
    Logreg(#[from] LogregError),
    #[error(transparent)]
    Feature(#[from] TokenFeatureError),
}

/// At most this many sections are handed to the downstream models.
pub const MAX_RELEVANT_SECTIONS: usize = 3;

/// Heading features cover this many tokens after any leading numbering.
const HEADING_TOKEN_COUNT: usize = 4;

/// Clause numbering ("14.", "3.2", "(a)") carries no heading signal.
fn is_numbering_token(token: &str) -> bool {
    let stripped: String =
        token.chars().filter(|c| !matches!(c, '(' | ')' | '.')).collect();
    stripped.is_empty()
        || stripped.chars().all(|c| c.is_ascii_digit())
        || (stripped.len() == 1 && token.starts_with('('))
}

/// Lowercases and strips surrounding punctuation; `None` for pure punctuation.
fn normalize_word(token: &str) -> Option<String> {
    let trimmed = token.trim_matches(|c: char| !c.is_ascii_alphanumeric());
    if trimmed.is_empty() {
        None
    } else {
        Some(sanitize(&trimmed.to_lowercase()))
    }
}

/// Section-level features for relevance ranking: the section type, the
/// first few heading tokens (skipping clause numbering), and a bag of the
/// section's lowercase words.
pub fn section_relevance_features(section: &Section) -> FeatureVector {
    let mut fv = FeatureVector::new();
    fv.flag(format!("sec:type={}", section.section_type));
    let heading = section
        .clean_text
        .split_whitespace()
        .skip_while(|t| is_numbering_token(t))
        .take(HEADING_TOKEN_COUNT);
    for (i, token) in heading.enumerate() {
        if let Some(word) = normalize_word(token) {
            fv.flag(format!("head:{i}={word}"));
        }
    }
    for token in section.clean_text.split_whitespace() {
        // Clause numbers and bare figures vary per document and would only
        // bloat the vocabulary.
        if is_numbering_token(token) {
            continue;
        }
        if let Some(word) = normalize_word(token) {
            fv.flag(format!("word:{word}"));
        }
    }
    fv
}

/// Features of several sections read together. With binary indicators this
/// is the union of the per-section features, so the result does not depend
/// on the order the sections are listed in.
pub fn classification_features(sections: &[&Section]) -> FeatureVector {
    let mut fv = FeatureVector::new();
    for section in sections {
        for (name, weight) in section_relevance_features(section).iter() {
            fv.set(name, weight);
        }
    }
    fv
}

/// Ranks the clause/sub-clause sections the attribute's relevance model
/// scores at one half or better, best first, keeping at most
/// [`MAX_RELEVANT_SECTIONS`]. Returns indices into `sections`.
pub fn select_relevant_sections(
    model: &RelevanceModel,
    sections: &[Section],
    attribute: Attribute,
) -> Vec<usize> {
    let Some(classifier) = model.model_for(attribute) else {
        return Vec::new();
    };
    let mut scored: Vec<(usize, f64)> = sections
        .iter()
        .enumerate()
        .filter(|(_, s)| s.section_type.is_body())
        .map(|(i, s)| (i, classifier.score(&section_relevance_features(s))))
        .filter(|(_, score)| *score >= 0.5)
        .collect();
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1).expect("scores are finite").then(a.0.cmp(&b.0))
    });
    scored.truncate(MAX_RELEVANT_SECTIONS);
    scored.into_iter().map(|(i, _)| i).collect()
}

/// Locates the answer span for an entity attribute.
///
/// Each relevant section's token stream is decoded with the span model;
/// among the decoded `B/I` runs the one with the highest mean in-answer
/// marginal wins. When the decoder finds no run at all, the single token
/// with the highest in-answer marginal stands in, so a prediction with
/// relevant sections always carries a span. `relevant` holds indices into
/// `sections`, as returned by [`select_relevant_sections`].
pub fn extract_entity(
    model: &CrfModel,
    doc: &Document,
    sections: &[Section],
    relevant: &[usize],
    attribute: Attribute,
    config: FeatureConfig,
) -> Result<AttributePrediction, ExtractError> {
    if attribute.kind() != AttributeKind::Entity {
        return Err(ExtractError::ModelMismatch(format!(
            "{attribute} is answered by classification, not span extraction"
        )));
    }
    let expected = answer_label_set();
    if model.label_set() != &expected {
        return Err(ExtractError::ModelMismatch(format!(
            "span model labels {:?} are not the answer tags",
            model.label_set().names().collect::<Vec<_>>()
        )));
    }
    let caller = config.fingerprint();
    let recorded = model.feature_fingerprint().unwrap_or("(unrecorded)");
    if recorded != caller {
        return Err(ExtractError::ModelMismatch(format!(
            "span model was trained with feature groups '{recorded}', caller passed '{caller}'"
        )));
    }
    if relevant.is_empty() {
        return Ok(AttributePrediction::no_relevant(attribute));
    }

    // (score, section index, first token, last token); ties keep the first
    // candidate in relevance-rank order.
    let mut best_run: Option<(f64, usize, usize, usize)> = None;
    let mut best_token: Option<(f64, usize, usize)> = None;
    for &si in relevant {
        let section = &sections[si];
        let features = section_token_features(doc, section, config)?;
        if features.is_empty() {
            continue;
        }
        let node_marginals = crf::marginals(model, &features);
        let in_answer: Vec<f64> =
            node_marginals.iter().map(|row| 1.0 - row[OUTSIDE_ANSWER]).collect();
        for (t, &p) in in_answer.iter().enumerate() {
            if best_token.map_or(true, |(bp, _, _)| p > bp) {
                best_token = Some((p, si, t));
            }
        }
        let path = crf::viterbi_decode(model, &features);
        let mut t = 0;
        while t < path.len() {
            if path[t] == OUTSIDE_ANSWER {
                t += 1;
                continue;
            }
            let first = t;
            while t < path.len() && path[t] != OUTSIDE_ANSWER {
                t += 1;
            }
            let last = t - 1;
            let score =
                in_answer[first..=last].iter().sum::<f64>() / (last - first + 1) as f64;
            if best_run.map_or(true, |(bs, ..)| score > bs) {
                best_run = Some((score, si, first, last));
            }
        }
    }

    let chosen = best_run.or(best_token.map(|(p, si, t)| (p, si, t, t)));
    let Some((score, si, first, last)) = chosen else {
        // The relevant sections held no tokens at all.
        return Ok(AttributePrediction::no_relevant(attribute));
    };
    let words: Vec<&str> = sections[si].clean_text.split_whitespace().collect();
    Ok(AttributePrediction {
        attribute,
        span: Some(AnswerSpan {
            section_index: si,
            first_token: first,
            last_token: last,
            text: words[first..=last].join(" "),
        }),
        answer: None,
        confidence: score,
        no_relevant_section: false,
    })
}

/// Answers a boolean attribute from the relevant sections read together.
///
/// The relevant sections are combined in document order regardless of
/// their relevance ranking, so ties in the ranking cannot change the
/// answer. An empty relevant set answers No with the flag set.
pub fn classify(
    model: &LogisticModel,
    sections: &[Section],
    relevant: &[usize],
    attribute: Attribute,
) -> Result<AttributePrediction, ExtractError> {
    if attribute.kind() != AttributeKind::Boolean {
        return Err(ExtractError::ModelMismatch(format!(
            "{attribute} is answered by span extraction, not classification"
        )));
    }
    if relevant.is_empty() {
        return Ok(AttributePrediction::no_relevant(attribute));
    }
    let mut ordered = relevant.to_vec();
    ordered.sort_unstable();
    ordered.dedup();
    let chosen: Vec<&Section> = ordered.iter().map(|&i| &sections[i]).collect();
    let score = model.score(&classification_features(&chosen));
    Ok(AttributePrediction {
        attribute,
        span: None,
        answer: Some(score >= 0.5),
        confidence: score,
        no_relevant_section: false,
    })
}

/// Runs the full battery: relevance selection plus the per-attribute
/// extractor, for every attribute in [`Attribute::ALL`] order.
pub fn predict_attributes(
    extractors: &Extractors,
    doc: &Document,
    sections: &[Section],
    config: FeatureConfig,
) -> Result<Vec<AttributePrediction>, ExtractError> {
    Attribute::ALL
        .into_iter()
        .map(|attribute| {
            let relevant = select_relevant_sections(&extractors.relevance, sections, attribute);
            match attribute.kind() {
                AttributeKind::Entity => {
                    let model = extractors.entity.get(&attribute).ok_or_else(|| {
                        ExtractError::ModelMismatch(format!(
                            "bundle holds no span model for {attribute}"
                        ))
                    })?;
                    extract_entity(model, doc, sections, &relevant, attribute, config)
                }
                AttributeKind::Boolean => {
                    let model = extractors.boolean.get(&attribute).ok_or_else(|| {
                        ExtractError::ModelMismatch(format!(
                            "bundle holds no classifier for {attribute}"
                        ))
                    })?;
                    classify(model, sections, &relevant, attribute)
                }
            }
        })
        .collect()
}

/// Training hyperparameters for the whole extractor battery.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractorTrainConfig {
    /// Feature groups used for answer-span token features.
    pub features: FeatureConfig,
    pub relevance: LogregConfig,
    pub boolean: LogregConfig,
    pub entity: TrainConfig,
}

impl Default for ExtractorTrainConfig {
    fn default() -> Self {
        ExtractorTrainConfig {
            features: FeatureConfig::all(),
            relevance: LogregConfig::default(),
            boolean: LogregConfig::default(),
            entity: TrainConfig::default(),
        }
    }
}

/// One training document with its gold sections assembled and its token
/// stream indexed for span projection.
struct PreparedDoc<'a> {
    doc: &'a Document,
    doc_id: &'a str,
    sections: Vec<Section>,
    /// Clause/sub-clause section indices in document order.
    body: Vec<usize>,
    /// (line, token-in-line) to global reading-order token index.
    token_index: HashMap<(LineRef, usize), usize>,
    gold: &'a GoldAttributes,
}

fn prepare<'a>(
    doc: &'a Document,
    gold: &'a GoldLabels,
) -> Result<PreparedDoc<'a>, TrainExtractorsError> {
    let sections = assemble_sections(doc, &gold.line_labels)?;
    let body = sections
        .iter()
        .enumerate()
        .filter(|(_, s)| s.section_type.is_body())
        .map(|(i, _)| i)
        .collect();
    let token_index = tokens_in_reading_order(doc)
        .into_iter()
        .enumerate()
        .map(|(g, key)| (key, g))
        .collect();
    Ok(PreparedDoc {
        doc,
        doc_id: &gold.doc_id,
        sections,
        body,
        token_index,
        gold: &gold.attributes,
    })
}

fn prepare_all<'a>(
    corpus: impl IntoIterator<Item = (&'a Document, &'a GoldLabels)>,
) -> Result<Vec<PreparedDoc<'a>>, TrainExtractorsError> {
    corpus.into_iter().map(|(doc, gold)| prepare(doc, gold)).collect()
}

fn gold_span(gold: &GoldAttributes, attribute: Attribute) -> Option<TokenSpan> {
    match attribute {
        Attribute::ExpirationDate => gold.expiration_date,
        Attribute::GoverningLaw => gold.governing_law,
        _ => None,
    }
}

/// The search stem whose presence marks a section as evidence for a
/// boolean attribute. Gold data records only the document-level yes/no,
/// so the carrying section is recovered lexically; every document the
/// generator emits contains the stem in exactly the planted clause plus,
/// occasionally, a neighboring boilerplate mention.
fn evidence_stem(attribute: Attribute) -> Option<&'static str> {
    match attribute {
        Attribute::TerminationForConvenience => Some("terminat"),
        Attribute::AntiAssignment => Some("assign"),
        _ => None,
    }
}

fn span_touches_section(p: &PreparedDoc<'_>, si: usize, span: TokenSpan) -> bool {
    p.sections[si].token_provenance.iter().any(|key| {
        p.token_index
            .get(key)
            .is_some_and(|&g| span.first_token <= g && g <= span.last_token)
    })
}

/// The body sections carrying an attribute's gold evidence.
fn evidence_sections(
    p: &PreparedDoc<'_>,
    attribute: Attribute,
) -> Result<BTreeSet<usize>, TrainExtractorsError> {
    match attribute.kind() {
        AttributeKind::Entity => {
            let Some(span) = gold_span(p.gold, attribute) else {
                return Ok(BTreeSet::new());
            };
            let hits: BTreeSet<usize> = p
                .body
                .iter()
                .copied()
                .filter(|&si| span_touches_section(p, si, span))
                .collect();
            if hits.is_empty() {
                return Err(TrainExtractorsError::UnresolvableSpan {
                    doc_id: p.doc_id.to_string(),
                    attribute,
                });
            }
            Ok(hits)
        }
        AttributeKind::Boolean => {
            let stem = evidence_stem(attribute).expect("boolean attributes have a stem");
            Ok(p.body
                .iter()
                .copied()
                .filter(|&si| p.sections[si].clean_text.to_lowercase().contains(stem))
                .collect())
        }
    }
}

/// Evidence sections plus their immediate body-section neighbors, in
/// document order. These are the sections the relevance model is taught
/// to flag.
fn gold_relevant(
    p: &PreparedDoc<'_>,
    attribute: Attribute,
) -> Result<Vec<usize>, TrainExtractorsError> {
    let evidence = evidence_sections(p, attribute)?;
    let mut relevant = evidence.clone();
    for (pos, &si) in p.body.iter().enumerate() {
        if evidence.contains(&si) {
            if pos > 0 {
                relevant.insert(p.body[pos - 1]);
            }
            if pos + 1 < p.body.len() {
                relevant.insert(p.body[pos + 1]);
            }
        }
    }
    Ok(relevant.into_iter().collect())
}

fn train_relevance_prepared(
    docs: &[PreparedDoc<'_>],
    config: &ExtractorTrainConfig,
) -> Result<RelevanceModel, TrainExtractorsError> {
    let mut models = BTreeMap::new();
    for attribute in Attribute::ALL {
        let mut examples = Vec::new();
        for p in docs {
            let relevant: BTreeSet<usize> = gold_relevant(p, attribute)?.into_iter().collect();
            for &si in &p.body {
                examples.push((
                    section_relevance_features(&p.sections[si]),
                    relevant.contains(&si),
                ));
            }
        }
        models.insert(attribute, train_logistic(&examples, &config.relevance)?);
    }
    Ok(RelevanceModel { models })
}

/// Projects the gold span onto a section's clean token stream as
/// `B-ans`/`I-ans`/`O` names.
fn project_answer_tags(p: &PreparedDoc<'_>, si: usize, span: TokenSpan) -> Vec<String> {
    let mut labels = Vec::with_capacity(p.sections[si].token_provenance.len());
    let mut previous_in_span = false;
    for key in &p.sections[si].token_provenance {
        let in_span = p
            .token_index
            .get(key)
            .is_some_and(|&g| span.first_token <= g && g <= span.last_token);
        let name = if !in_span {
            "O"
        } else if previous_in_span {
            "I-ans"
        } else {
            "B-ans"
        };
        labels.push(name.to_string());
        previous_in_span = in_span;
    }
    labels
}

fn train_entity_prepared(
    docs: &[PreparedDoc<'_>],
    attribute: Attribute,
    config: &ExtractorTrainConfig,
) -> Result<CrfModel, TrainExtractorsError> {
    if attribute.kind() != AttributeKind::Entity {
        return Err(TrainExtractorsError::WrongKind {
            attribute,
            expected: "span",
            actual: "yes/no",
        });
    }
    let mut instances = Vec::new();
    for p in docs {
        let Some(span) = gold_span(p.gold, attribute) else {
            continue;
        };
        // The neighbors in the gold-relevant set contribute all-`O`
        // sequences, teaching the tagger to stay quiet off the answer.
        for si in gold_relevant(p, attribute)? {
            let features = section_token_features(p.doc, &p.sections[si], config.features)?;
            if features.is_empty() {
                continue;
            }
            let labels = project_answer_tags(p, si, span);
            instances.push(crf::Instance { features, labels });
        }
    }
    let mut model = crf::train(&instances, &answer_label_set(), &config.entity)?;
    model.set_feature_fingerprint(Some(config.features.fingerprint()));
    Ok(model)
}

fn train_classifier_prepared(
    docs: &[PreparedDoc<'_>],
    attribute: Attribute,
    config: &ExtractorTrainConfig,
) -> Result<LogisticModel, TrainExtractorsError> {
    if attribute.kind() != AttributeKind::Boolean {
        return Err(TrainExtractorsError::WrongKind {
            attribute,
            expected: "yes/no",
            actual: "span",
        });
    }
    let mut examples = Vec::new();
    for p in docs {
        let relevant = gold_relevant(p, attribute)?;
        if relevant.is_empty() {
            continue;
        }
        let chosen: Vec<&Section> = relevant.iter().map(|&i| &p.sections[i]).collect();
        let target = match attribute {
            Attribute::TerminationForConvenience => p.gold.termination_for_convenience,
            Attribute::AntiAssignment => p.gold.anti_assignment,
            _ => unreachable!("kind checked above"),
        };
        examples.push((classification_features(&chosen), target));
    }
    Ok(train_logistic(&examples, &config.boolean)?)
}

/// Trains the per-attribute relevance classifiers on gold sections.
pub fn train_relevance<'a>(
    corpus: impl IntoIterator<Item = (&'a Document, &'a GoldLabels)>,
    config: &ExtractorTrainConfig,
) -> Result<RelevanceModel, TrainExtractorsError> {
    train_relevance_prepared(&prepare_all(corpus)?, config)
}

/// Trains the answer-span tagger for one entity attribute.
pub fn train_entity<'a>(
    corpus: impl IntoIterator<Item = (&'a Document, &'a GoldLabels)>,
    attribute: Attribute,
    config: &ExtractorTrainConfig,
) -> Result<CrfModel, TrainExtractorsError> {
    train_entity_prepared(&prepare_all(corpus)?, attribute, config)
}

/// Trains the yes/no classifier for one boolean attribute.
pub fn train_classifier<'a>(
    corpus: impl IntoIterator<Item = (&'a Document, &'a GoldLabels)>,
    attribute: Attribute,
    config: &ExtractorTrainConfig,
) -> Result<LogisticModel, TrainExtractorsError> {
    train_classifier_prepared(&prepare_all(corpus)?, attribute, config)
}

/// Trains every model in the battery from one pass over the corpus.
pub fn train_extractors<'a>(
    corpus: impl IntoIterator<Item = (&'a Document, &'a GoldLabels)>,
    config: &ExtractorTrainConfig,
) -> Result<Extractors, TrainExtractorsError> {
    let docs = prepare_all(corpus)?;
    let relevance = train_relevance_prepared(&docs, config)?;
    let mut entity = BTreeMap::new();
    let mut boolean = BTreeMap::new();
    for attribute in Attribute::ALL {
        match attribute.kind() {
            AttributeKind::Entity => {
                entity.insert(attribute, train_entity_prepared(&docs, attribute, config)?);
            }
            AttributeKind::Boolean => {
                boolean
                    .insert(attribute, train_classifier_prepared(&docs, attribute, config)?);
            }
        }
    }
    Ok(Extractors { relevance, entity, boolean })
}

/// Current on-disk bundle format version.
pub const EXTRACTORS_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct BundleFile {
    version: u32,
    relevance: BTreeMap<String, LogisticModel>,
    entity: BTreeMap<String, serde_json::Value>,
    boolean: BTreeMap<String, LogisticModel>,
}

#[derive(Debug, Error)]
pub enum ExtractorIoError {
    #[error("failed to read or write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("extractor bundle is not valid JSON: {message}")]
    Json { message: String },
    #[error(
        "unsupported extractor bundle version {found} \
         (this build reads version {EXTRACTORS_FORMAT_VERSION})"
    )]
    UnknownVersion { found: u32 },
    #[error("malformed extractor bundle: {message}")]
    Invalid { message: String },
}

/// Serializes the bundle to canonical JSON (pretty-printed, trailing
/// newline). The same bundle always produces the same bytes.
pub fn extractors_to_json(extractors: &Extractors) -> String {
    let file = BundleFile {
        version: EXTRACTORS_FORMAT_VERSION,
        relevance: extractors
            .relevance
            .models
            .iter()
            .map(|(a, m)| (a.name().to_string(), m.clone()))
            .collect(),
        entity: extractors
            .entity
            .iter()
            .map(|(a, m)| (a.name().to_string(), crf::model_to_value(m)))
            .collect(),
        boolean: extractors
            .boolean
            .iter()
            .map(|(a, m)| (a.name().to_string(), m.clone()))
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("bundle serializes");
    text.push('\n');
    text
}

fn parse_attribute_key(key: &str, expected: AttributeKind) -> Result<Attribute, ExtractorIoError> {
    let attribute = Attribute::parse(key).ok_or_else(|| ExtractorIoError::Invalid {
        message: format!("unknown attribute {key:?}"),
    })?;
    if attribute.kind() != expected {
        return Err(ExtractorIoError::Invalid {
            message: format!("attribute {key:?} is filed under the wrong model family"),
        });
    }
    Ok(attribute)
}

/// Parses and validates a bundle from JSON text.
pub fn extractors_from_json(text: &str) -> Result<Extractors, ExtractorIoError> {
    let file: BundleFile = serde_json::from_str(text).map_err(|e| ExtractorIoError::Json {
        message: e.to_string(),
    })?;
    if file.version != EXTRACTORS_FORMAT_VERSION {
        return Err(ExtractorIoError::UnknownVersion { found: file.version });
    }
    let mut relevance = BTreeMap::new();
    for (key, model) in file.relevance {
        let attribute = Attribute::parse(&key).ok_or_else(|| ExtractorIoError::Invalid {
            message: format!("unknown attribute {key:?}"),
        })?;
        relevance.insert(attribute, model);
    }
    let mut entity = BTreeMap::new();
    for (key, value) in file.entity {
        let attribute = parse_attribute_key(&key, AttributeKind::Entity)?;
        let model = crf::model_from_value(value).map_err(|e| ExtractorIoError::Invalid {
            message: format!("span model for {key}: {e}"),
        })?;
        entity.insert(attribute, model);
    }
    let mut boolean = BTreeMap::new();
    for (key, model) in file.boolean {
        let attribute = parse_attribute_key(&key, AttributeKind::Boolean)?;
        boolean.insert(attribute, model);
    }
    Ok(Extractors {
        relevance: RelevanceModel { models: relevance },
        entity,
        boolean,
    })
}

pub fn save_extractors(
    path: impl AsRef<Path>,
    extractors: &Extractors,
) -> Result<(), ExtractorIoError> {
    let path = path.as_ref();
    std::fs::write(path, extractors_to_json(extractors)).map_err(|source| {
        ExtractorIoError::Io { path: path.display().to_string(), source }
    })
}

pub fn load_extractors(path: impl AsRef<Path>) -> Result<Extractors, ExtractorIoError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ExtractorIoError::Io {
        path: path.display().to_string(),
        source,
    })?;
    extractors_from_json(&text)
}
