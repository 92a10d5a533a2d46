//! End-to-end pipeline comparison.
//!
//! Three systems answer the same four attributes on the test split:
//! hand-written rules, the learned extractors over text-only sections,
//! and the same extractors over visually-split sections. One extractor
//! bundle is trained (on gold sections) and shared by both learned
//! pipelines, so any score gap between them is attributable to section
//! quality alone; the rules see the text-only sections, mirroring a
//! rules deployment with no visual model in the loop.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use super::reference::{ANTI_ASSIGNMENT_VISUAL_REFERENCE, END_TO_END_REFERENCE};
use super::{
    attribute_prf, format_score, gold_answer, AlignmentError, GoldAnswer, Metrics,
};
use crate::corpus::{CorpusSplit, GoldLabels};
use crate::crf::{CrfModel, TrainConfig};
use crate::doc::Document;
use crate::extract::{
    predict_attributes, train_extractors, Attribute, ExtractError, ExtractorTrainConfig,
    Extractors, PredictionRecord, TrainExtractorsError,
};
use crate::features::FeatureConfig;
use crate::rules::{apply_rules, MatchPolicy, RuleSet};
use crate::splitter::{
    assemble_sections, split_document, train_splitter, Section, SplitterError,
    TrainSplitterError,
};

/// The three systems under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    /// Hand-written pattern rules over text-only sections.
    Rules,
    /// Learned extractors over text-only sections.
    Model,
    /// Learned extractors over visually-split sections.
    ModelVisual,
}

impl Pipeline {
    pub const ALL: [Pipeline; 3] = [Pipeline::Rules, Pipeline::Model, Pipeline::ModelVisual];

    pub fn as_str(&self) -> &'static str {
        match self {
            Pipeline::Rules => "rules",
            Pipeline::Model => "model",
            Pipeline::ModelVisual => "model+visual",
        }
    }
}

impl std::fmt::Display for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything the comparison needs at inference time.
pub struct ComparisonArtifacts {
    pub baseline_splitter: CrfModel,
    pub visual_splitter: CrfModel,
    pub extractors: Extractors,
    /// Feature groups the extractors were trained with; both learned
    /// pipelines featurize sections with these regardless of which
    /// splitter produced the sections.
    pub extractor_features: FeatureConfig,
    pub rules: RuleSet,
}

#[derive(Debug, Error)]
pub enum CompareError {
    #[error(transparent)]
    TrainSplitter(#[from] TrainSplitterError),
    #[error(transparent)]
    TrainExtractors(#[from] TrainExtractorsError),
    #[error(transparent)]
    Split(#[from] SplitterError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
    #[error("corpus split index {index} is out of range for {len} documents")]
    IndexOutOfRange { index: usize, len: usize },
}

fn pick<'a>(
    corpus: &'a [(Document, GoldLabels)],
    indices: &[usize],
) -> Result<Vec<&'a (Document, GoldLabels)>, CompareError> {
    indices
        .iter()
        .map(|&index| {
            corpus.get(index).ok_or(CompareError::IndexOutOfRange { index, len: corpus.len() })
        })
        .collect()
}

/// Trains the two splitters and the shared extractor bundle on the train
/// split.
pub fn train_comparison_artifacts(
    corpus: &[(Document, GoldLabels)],
    split: &CorpusSplit,
    rules: RuleSet,
    splitter_config: &TrainConfig,
    extractor_config: &ExtractorTrainConfig,
) -> Result<ComparisonArtifacts, CompareError> {
    let train_docs = pick(corpus, &split.train)?;
    let tagged = || train_docs.iter().map(|(doc, gold)| (doc, gold.line_labels.as_slice()));
    let baseline_splitter =
        train_splitter(tagged(), FeatureConfig::baseline(), splitter_config)?;
    let visual_splitter = train_splitter(tagged(), FeatureConfig::all(), splitter_config)?;
    let extractors = train_extractors(
        train_docs.iter().map(|(doc, gold)| (doc, gold)),
        extractor_config,
    )?;
    Ok(ComparisonArtifacts {
        baseline_splitter,
        visual_splitter,
        extractors,
        extractor_features: extractor_config.features,
        rules,
    })
}

/// One cell of the comparison grid.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub pipeline: Pipeline,
    pub attribute: Attribute,
    pub metrics: Metrics,
}

/// The full grid, pipeline-major in [`Pipeline::ALL`] order.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
}

/// Scores all three pipelines on the test split.
pub fn run_endtoend_comparison(
    corpus: &[(Document, GoldLabels)],
    split: &CorpusSplit,
    artifacts: &ComparisonArtifacts,
) -> Result<ComparisonReport, CompareError> {
    let test_docs = pick(corpus, &split.test)?;

    let mut golds: Vec<(Attribute, Vec<(String, GoldAnswer)>)> =
        Attribute::ALL.iter().map(|&a| (a, Vec::new())).collect();
    let mut rule_records = Vec::new();
    let mut model_records = Vec::new();
    let mut visual_records = Vec::new();
    for (doc, gold) in &test_docs {
        let gold_sections = assemble_sections(doc, &gold.line_labels)?;
        for (attribute, list) in &mut golds {
            list.push((
                gold.doc_id.clone(),
                gold_answer(doc, &gold_sections, gold, *attribute),
            ));
        }

        let baseline_sections =
            split_document(&artifacts.baseline_splitter, doc, FeatureConfig::baseline())?;
        let visual_sections =
            split_document(&artifacts.visual_splitter, doc, FeatureConfig::all())?;

        for attribute in Attribute::ALL {
            let verdict = apply_rules(
                &artifacts.rules,
                doc,
                &baseline_sections,
                attribute,
                MatchPolicy::FirstWins,
            );
            rule_records.push(verdict.record(&gold.doc_id));
        }
        model_records.extend(predict(doc, gold, &baseline_sections, artifacts)?);
        visual_records.extend(predict(doc, gold, &visual_sections, artifacts)?);
    }

    let mut rows = Vec::new();
    for pipeline in Pipeline::ALL {
        let records: &[PredictionRecord] = match pipeline {
            Pipeline::Rules => &rule_records,
            Pipeline::Model => &model_records,
            Pipeline::ModelVisual => &visual_records,
        };
        for (attribute, gold_list) in &golds {
            rows.push(ComparisonRow {
                pipeline,
                attribute: *attribute,
                metrics: attribute_prf(records, gold_list, *attribute)?,
            });
        }
    }
    Ok(ComparisonReport { rows })
}

fn predict(
    doc: &Document,
    gold: &GoldLabels,
    sections: &[Section],
    artifacts: &ComparisonArtifacts,
) -> Result<Vec<PredictionRecord>, CompareError> {
    let predictions =
        predict_attributes(&artifacts.extractors, doc, sections, artifacts.extractor_features)?;
    Ok(predictions.iter().map(|p| PredictionRecord::new(&gold.doc_id, p)).collect())
}

impl ComparisonReport {
    /// One cell's metrics.
    pub fn metrics(&self, pipeline: Pipeline, attribute: Attribute) -> Option<&Metrics> {
        self.rows
            .iter()
            .find(|r| r.pipeline == pipeline && r.attribute == attribute)
            .map(|r| &r.metrics)
    }

    /// Renders the grid with the published reference results as trailing
    /// comment lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("pipeline,attribute,P,R,F1,tp,fp,fn\n");
        for row in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                row.pipeline,
                row.attribute,
                format_score(row.metrics.precision()),
                format_score(row.metrics.recall()),
                format_score(row.metrics.f1()),
                row.metrics.tp,
                row.metrics.fp,
                row.metrics.missed
            )
            .expect("writing to a String cannot fail");
        }
        out.push_str(
            "# reference: published results on a 510-contract benchmark; context only, not comparable to the synthetic scores above\n",
        );
        for r in &END_TO_END_REFERENCE {
            writeln!(
                out,
                "# reference,{},{},{:.2},{:.2},{:.2}",
                r.pipeline, r.attribute, r.scores.precision, r.scores.recall, r.scores.f1
            )
            .expect("writing to a String cannot fail");
        }
        out.push_str("# reference: anti-assignment with and without visual cues in the splitter\n");
        for r in &ANTI_ASSIGNMENT_VISUAL_REFERENCE {
            writeln!(
                out,
                "# reference,{},anti_assignment,{:.2},{:.2},{:.2}",
                r.sections, r.scores.precision, r.scores.recall, r.scores.f1
            )
            .expect("writing to a String cannot fail");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{corpus_split, generate_corpus, GenConfig};
    use crate::rules::load_rules;

    fn tiny_corpus() -> Vec<(Document, GoldLabels)> {
        let config = GenConfig {
            doc_count: 10,
            mean_words_per_doc: 320,
            ..GenConfig::default()
        };
        generate_corpus(&config).expect("valid config")
    }

    fn quick_artifacts(
        corpus: &[(Document, GoldLabels)],
        split: &CorpusSplit,
    ) -> ComparisonArtifacts {
        let rules = load_rules(concat!(env!("CARGO_MANIFEST_DIR"), "/../../rules/starter.jsonl"))
            .expect("starter rules parse");
        let splitter_config = TrainConfig { max_iterations: 30, ..TrainConfig::default() };
        let extractor_config = ExtractorTrainConfig {
            entity: TrainConfig { max_iterations: 40, ..TrainConfig::default() },
            ..ExtractorTrainConfig::default()
        };
        train_comparison_artifacts(corpus, split, rules, &splitter_config, &extractor_config)
            .expect("artifacts train")
    }

    #[test]
    fn comparison_covers_the_full_grid_and_is_deterministic() {
        let corpus = tiny_corpus();
        let split = corpus_split(corpus.len(), 7);
        let artifacts = quick_artifacts(&corpus, &split);

        let report = run_endtoend_comparison(&corpus, &split, &artifacts).expect("runs");
        assert_eq!(report.rows.len(), Pipeline::ALL.len() * Attribute::ALL.len());
        for pipeline in Pipeline::ALL {
            for attribute in Attribute::ALL {
                let m = report
                    .metrics(pipeline, attribute)
                    .unwrap_or_else(|| panic!("missing cell {pipeline}/{attribute}"));
                let total = m.tp + m.fp + m.missed + m.tn;
                let docs = split.test.len();
                match attribute.kind() {
                    // Every test document lands in exactly one confusion
                    // cell.
                    crate::extract::AttributeKind::Boolean => {
                        assert_eq!(total, docs, "{pipeline}/{attribute}")
                    }
                    // A wrong-text extraction books both a fp and a
                    // miss, so the total can exceed the doc count by at
                    // most min(fp, missed).
                    crate::extract::AttributeKind::Entity => {
                        assert!(total >= docs, "{pipeline}/{attribute}");
                        assert!(
                            total <= docs + m.fp.min(m.missed),
                            "{pipeline}/{attribute}"
                        );
                    }
                }
            }
        }

        let again = run_endtoend_comparison(&corpus, &split, &artifacts).expect("runs");
        assert_eq!(report.to_csv(), again.to_csv());
    }

    #[test]
    fn csv_has_the_contracted_columns_and_reference_footer() {
        let corpus = tiny_corpus();
        let split = corpus_split(corpus.len(), 7);
        let artifacts = quick_artifacts(&corpus, &split);
        let csv = run_endtoend_comparison(&corpus, &split, &artifacts).expect("runs").to_csv();

        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "pipeline,attribute,P,R,F1,tp,fp,fn");
        let data: Vec<&&str> = lines.iter().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data.len(), 1 + 12);
        assert!(lines[1].starts_with("rules,expiration_date,"));

        let reference: Vec<&&str> =
            lines.iter().filter(|l| l.starts_with("# reference,")).collect();
        assert_eq!(reference.len(), 12 + 2);
        assert!(csv.contains("# reference,sectioned-pipeline,governing_law,0.98,0.98,0.98"));
        assert!(csv.contains("# reference,visual-split,anti_assignment,0.93,0.81,0.85"));
    }

    #[test]
    fn out_of_range_split_indices_are_rejected() {
        let corpus = tiny_corpus();
        let mut split = corpus_split(corpus.len(), 7);
        split.train.push(42);
        let rules = load_rules(concat!(env!("CARGO_MANIFEST_DIR"), "/../../rules/starter.jsonl"))
            .expect("starter rules parse");
        let err = train_comparison_artifacts(
            &corpus,
            &split,
            rules,
            &TrainConfig::default(),
            &ExtractorTrainConfig::default(),
        )
        .map(|_| ())
        .unwrap_err();
        assert!(matches!(err, CompareError::IndexOutOfRange { index: 42, .. }));
    }
}
