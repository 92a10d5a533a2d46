//! Line tagging and section assembly.
//!
//! A document's lines are tagged with BIO tags over four section types
//! (clause, sub-clause, header, footer); [`assemble_sections`] turns a
//! tag sequence back into typed [`Section`]s, repairing orphan `I-*`
//! tags and re-joining clauses that a page break (with its header/footer
//! furniture) interrupted mid-sentence.

use crate::doc::{lines_in_reading_order, Document, LineRef};
use crate::features::{DocumentFeatures, FeatureConfig};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// The four section types a line run can form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SectionType {
    Clause,
    Subclause,
    Header,
    Footer,
}

impl SectionType {
    pub const ALL: [SectionType; 4] = [
        SectionType::Clause,
        SectionType::Subclause,
        SectionType::Header,
        SectionType::Footer,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SectionType::Clause => "clause",
            SectionType::Subclause => "subclause",
            SectionType::Header => "header",
            SectionType::Footer => "footer",
        }
    }

    /// True for the narrative types whose sections a page break can split.
    pub fn is_body(&self) -> bool {
        matches!(self, SectionType::Clause | SectionType::Subclause)
    }
}

impl fmt::Display for SectionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-line BIO tag. The numeric order of the variants is the label
/// order used by the tagging model, so Viterbi ties resolve toward the
/// earlier variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SectionTag {
    #[serde(rename = "B-clause")]
    BClause,
    #[serde(rename = "I-clause")]
    IClause,
    #[serde(rename = "B-subclause")]
    BSubclause,
    #[serde(rename = "I-subclause")]
    ISubclause,
    #[serde(rename = "B-header")]
    BHeader,
    #[serde(rename = "I-header")]
    IHeader,
    #[serde(rename = "B-footer")]
    BFooter,
    #[serde(rename = "I-footer")]
    IFooter,
    #[serde(rename = "O")]
    Outside,
}

impl SectionTag {
    pub const ALL: [SectionTag; 9] = [
        SectionTag::BClause,
        SectionTag::IClause,
        SectionTag::BSubclause,
        SectionTag::ISubclause,
        SectionTag::BHeader,
        SectionTag::IHeader,
        SectionTag::BFooter,
        SectionTag::IFooter,
        SectionTag::Outside,
    ];

    pub fn index(&self) -> usize {
        Self::ALL.iter().position(|t| t == self).expect("tag is in ALL")
    }

    pub fn from_index(i: usize) -> Option<SectionTag> {
        Self::ALL.get(i).copied()
    }

    pub fn name(&self) -> &'static str {
        match self {
            SectionTag::BClause => "B-clause",
            SectionTag::IClause => "I-clause",
            SectionTag::BSubclause => "B-subclause",
            SectionTag::ISubclause => "I-subclause",
            SectionTag::BHeader => "B-header",
            SectionTag::IHeader => "I-header",
            SectionTag::BFooter => "B-footer",
            SectionTag::IFooter => "I-footer",
            SectionTag::Outside => "O",
        }
    }

    pub fn parse(s: &str) -> Option<SectionTag> {
        Self::ALL.iter().copied().find(|t| t.name() == s)
    }

    /// Section type this tag contributes to (`None` for `O`).
    pub fn section_type(&self) -> Option<SectionType> {
        match self {
            SectionTag::BClause | SectionTag::IClause => Some(SectionType::Clause),
            SectionTag::BSubclause | SectionTag::ISubclause => Some(SectionType::Subclause),
            SectionTag::BHeader | SectionTag::IHeader => Some(SectionType::Header),
            SectionTag::BFooter | SectionTag::IFooter => Some(SectionType::Footer),
            SectionTag::Outside => None,
        }
    }

    pub fn is_begin(&self) -> bool {
        matches!(
            self,
            SectionTag::BClause | SectionTag::BSubclause | SectionTag::BHeader | SectionTag::BFooter
        )
    }

    /// The `B-` tag for a type.
    pub fn begin(ty: SectionType) -> SectionTag {
        match ty {
            SectionType::Clause => SectionTag::BClause,
            SectionType::Subclause => SectionTag::BSubclause,
            SectionType::Header => SectionTag::BHeader,
            SectionType::Footer => SectionTag::BFooter,
        }
    }

    /// The `I-` tag for a type.
    pub fn inside(ty: SectionType) -> SectionTag {
        match ty {
            SectionType::Clause => SectionTag::IClause,
            SectionType::Subclause => SectionTag::ISubclause,
            SectionType::Header => SectionTag::IHeader,
            SectionType::Footer => SectionTag::IFooter,
        }
    }
}

impl fmt::Display for SectionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An assembled section: a typed run of lines with its cleaned text.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub section_type: SectionType,
    /// Member lines in reading order. Interrupting header/footer lines at
    /// a page boundary are *not* members.
    pub line_refs: Vec<LineRef>,
    /// Member line texts joined with single spaces.
    pub clean_text: String,
    /// For each whitespace token of `clean_text`, the source token
    /// `(line, token index within line)`.
    pub token_provenance: Vec<(LineRef, usize)>,
}

/// Errors from tagging and assembly.
#[derive(Debug, Error)]
pub enum SplitterError {
    #[error("expected {expected} tags for {expected} lines, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("document has no lines to tag")]
    InvalidDocument,
    #[error("feature config mismatch: model was trained with '{model}', caller passed '{caller}'")]
    ConfigMismatch { model: String, caller: String },
}

/// Does this line text end a sentence for page-break purposes?
fn ends_sentence(text: &str) -> bool {
    matches!(text.trim_end().chars().last(), Some('.') | Some(';'))
}

/// Group tagged lines into sections.
///
/// Rules, applied in reading order:
///
/// 1. maximal same-type runs become sections; an explicit `B-*` always
///    starts a new run;
/// 2. an orphan `I-*` (previous line not of the same type) starts a run
///    as if it were `B-*`;
/// 3. a clause/sub-clause run continues across a page boundary into the
///    next same-type run when the lines between them are all tagged
///    header or footer and the pre-break line does not end a sentence
///    (no terminal `.` or `;`);
/// 4. `O` lines belong to no section.
pub fn assemble_sections(
    doc: &Document,
    tags: &[SectionTag],
) -> Result<Vec<Section>, SplitterError> {
    let ordered = lines_in_reading_order(doc);
    if tags.len() != ordered.len() {
        return Err(SplitterError::LengthMismatch { expected: ordered.len(), got: tags.len() });
    }

    // Pass 1: group lines into same-type runs (orphan I-* repairs fall
    // out of the grouping: any line starting a run acts as B-*).
    struct Run {
        ty: SectionType,
        lines: Vec<usize>, // global line indices
    }
    let mut runs: Vec<Run> = Vec::new();
    for (gi, tag) in tags.iter().enumerate() {
        let Some(ty) = tag.section_type() else { continue };
        let extends = !tag.is_begin()
            && runs
                .last()
                .is_some_and(|r| r.ty == ty && *r.lines.last().unwrap() == gi.wrapping_sub(1));
        if extends {
            runs.last_mut().unwrap().lines.push(gi);
        } else {
            runs.push(Run { ty, lines: vec![gi] });
        }
    }

    // Pass 2: merge body runs separated only by page-boundary furniture
    // when the earlier run stops mid-sentence.
    let mut merged: Vec<Run> = Vec::new();
    for run in runs {
        // The previous body run may be separated from this one by
        // header/footer runs, which become sections of their own either way.
        let prev_body = if run.ty.is_body() {
            merged.iter().rposition(|r| r.ty.is_body())
        } else {
            None
        };
        let can_merge = prev_body.is_some_and(|pi| {
            let prev = &merged[pi];
            if prev.ty != run.ty {
                return false;
            }
            let prev_last = *prev.lines.last().unwrap();
            let first = run.lines[0];
            if first <= prev_last + 1 {
                return false; // no gap: an explicit B-* starts a new section
            }
            let gap_is_furniture = (prev_last + 1..first).all(|gi| {
                tags[gi]
                    .section_type()
                    .is_some_and(|t| matches!(t, SectionType::Header | SectionType::Footer))
            });
            let crosses_page = ordered[first].0.page > ordered[prev_last].0.page;
            gap_is_furniture && crosses_page && !ends_sentence(&ordered[prev_last].1.text())
        });
        if let Some(pi) = prev_body.filter(|_| can_merge) {
            merged[pi].lines.extend(run.lines);
        } else {
            merged.push(run);
        }
    }

    // Pass 3: materialize sections with clean text and provenance.
    let sections = merged
        .into_iter()
        .map(|run| {
            let mut clean_parts: Vec<&str> = Vec::new();
            let mut provenance = Vec::new();
            let mut line_refs = Vec::with_capacity(run.lines.len());
            for &gi in &run.lines {
                let (r, line) = ordered[gi];
                line_refs.push(r);
                for (ti, tok) in line.tokens.iter().enumerate() {
                    clean_parts.push(&tok.text);
                    provenance.push((r, ti));
                }
            }
            Section {
                section_type: run.ty,
                line_refs,
                clean_text: clean_parts.join(" "),
                token_provenance: provenance,
            }
        })
        .collect();
    Ok(sections)
}

/// Serializable record of one section, with reading-order line indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionRecord {
    #[serde(rename = "type")]
    pub section_type: SectionType,
    pub first_line: usize,
    pub last_line: usize,
    pub clean_text: String,
}

/// Per-document section listing as written by the `split` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionsFile {
    pub doc_id: String,
    pub sections: Vec<SectionRecord>,
}

/// Project sections onto serializable records using reading-order indices.
pub fn section_records(doc: &Document, sections: &[Section]) -> SectionsFile {
    let order = crate::doc::ReadingOrder::of(doc);
    let records = sections
        .iter()
        .map(|s| {
            let first = order.position(s.line_refs[0]).expect("section refs are valid");
            let last =
                order.position(*s.line_refs.last().unwrap()).expect("section refs are valid");
            SectionRecord {
                section_type: s.section_type,
                first_line: first,
                last_line: last,
                clean_text: s.clean_text.clone(),
            }
        })
        .collect();
    SectionsFile { doc_id: doc.doc_id.clone(), sections: records }
}

/// The nine-tag label set in [`SectionTag::index`] order.
pub fn tag_label_set() -> crate::crf::LabelSet {
    crate::crf::LabelSet::new(SectionTag::ALL.iter().map(|t| t.name()))
        .expect("tag names are distinct")
}

/// Trains the line tagger: one CRF training sequence per document, with
/// line features extracted under `feature_config`. The resulting model
/// records the feature-group fingerprint so prediction can verify it.
pub fn train_splitter<'a>(
    corpus: impl IntoIterator<Item = (&'a Document, &'a [SectionTag])>,
    feature_config: FeatureConfig,
    train_config: &crate::crf::TrainConfig,
) -> Result<crate::crf::CrfModel, TrainSplitterError> {
    let mut instances = Vec::new();
    for (doc, tags) in corpus {
        let context = DocumentFeatures::new(doc, feature_config)
            .map_err(|_| TrainSplitterError::EmptyDocument {
                doc_id: doc.doc_id.clone(),
            })?;
        if context.order().len() != tags.len() {
            return Err(TrainSplitterError::Split(SplitterError::LengthMismatch {
                expected: context.order().len(),
                got: tags.len(),
            }));
        }
        instances.push(crate::crf::Instance {
            features: context.sequence(),
            labels: tags.iter().map(|t| t.name().to_string()).collect(),
        });
    }
    let mut model = crate::crf::train(&instances, &tag_label_set(), train_config)?;
    model.set_feature_fingerprint(Some(feature_config.fingerprint()));
    Ok(model)
}

/// Errors from splitter training.
#[derive(Debug, Error)]
pub enum TrainSplitterError {
    #[error("document {doc_id} has no tokens to featurize")]
    EmptyDocument { doc_id: String },
    #[error(transparent)]
    Split(#[from] SplitterError),
    #[error(transparent)]
    Crf(#[from] crate::crf::CrfError),
}

/// Tags every line of `doc` in reading order with the trained model.
///
/// The model must carry the same feature fingerprint as `feature_config`
/// and its labels must be the nine section tags.
pub fn predict_tags(
    model: &crate::crf::CrfModel,
    doc: &Document,
    feature_config: FeatureConfig,
) -> Result<Vec<SectionTag>, SplitterError> {
    let caller = feature_config.fingerprint();
    let recorded = model.feature_fingerprint().unwrap_or("(unrecorded)");
    if recorded != caller {
        return Err(SplitterError::ConfigMismatch {
            model: recorded.to_string(),
            caller,
        });
    }
    let expected = tag_label_set();
    if model.label_set() != &expected {
        return Err(SplitterError::ConfigMismatch {
            model: format!("label set {:?}", model.label_set().names().collect::<Vec<_>>()),
            caller: "the nine section tags".to_string(),
        });
    }
    let context =
        DocumentFeatures::new(doc, feature_config).map_err(|_| SplitterError::InvalidDocument)?;
    if context.order().is_empty() {
        return Err(SplitterError::InvalidDocument);
    }
    let decoded = crate::crf::viterbi_decode(model, &context.sequence());
    Ok(decoded
        .into_iter()
        .map(|i| SectionTag::from_index(i).expect("decoder stays inside the label set"))
        .collect())
}

/// Composition of [`predict_tags`] and [`assemble_sections`].
pub fn split_document(
    model: &crate::crf::CrfModel,
    doc: &Document,
    feature_config: FeatureConfig,
) -> Result<Vec<Section>, SplitterError> {
    let tags = predict_tags(model, doc, feature_config)?;
    assemble_sections(doc, &tags)
}
