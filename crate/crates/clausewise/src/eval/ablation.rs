//! Section-splitting feature ablation.
//!
//! Trains one splitter per feature variant — the text-only baseline,
//! each visual group added alone, and all groups together — on the train
//! split, then scores each on the test split with exact section
//! matching. The report carries relative deltas against the baseline row
//! and prints the published benchmark's corresponding numbers as
//! clearly marked reference footer lines.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use super::reference::SPLITTER_REFERENCE;
use super::{format_score, section_prf, MatchMode, Metrics, SectionSpan};
use crate::corpus::{CorpusSplit, GoldLabels};
use crate::crf::TrainConfig;
use crate::doc::Document;
use crate::features::FeatureConfig;
use crate::splitter::{
    split_document, train_splitter, SectionType, SplitterError, TrainSplitterError,
};

/// One feature variant of the ablation grid.
#[derive(Debug, Clone, Copy)]
pub struct AblationVariant {
    pub name: &'static str,
    pub features: FeatureConfig,
}

/// The six variants, baseline first. Each augmentation enables exactly
/// one visual group on top of the always-on baseline features.
pub fn ablation_variants() -> [AblationVariant; 6] {
    let base = FeatureConfig::baseline();
    [
        AblationVariant { name: "baseline", features: base },
        AblationVariant {
            name: "+page_layout",
            features: FeatureConfig { page_layout: true, ..base },
        },
        AblationVariant {
            name: "+text_placement",
            features: FeatureConfig { text_placement: true, ..base },
        },
        AblationVariant {
            name: "+visual_grouping",
            features: FeatureConfig { visual_grouping: true, ..base },
        },
        AblationVariant { name: "+style", features: FeatureConfig { style: true, ..base } },
        AblationVariant { name: "+all_groups", features: FeatureConfig::all() },
    ]
}

/// Scores for one trained variant.
#[derive(Debug, Clone, Serialize)]
pub struct AblationRow {
    pub variant: String,
    pub scores: BTreeMap<SectionType, Metrics>,
}

/// The full ablation grid, rows in [`ablation_variants`] order.
#[derive(Debug, Clone, Serialize)]
pub struct AblationReport {
    pub rows: Vec<AblationRow>,
}

#[derive(Debug, Error)]
pub enum AblationError {
    #[error(transparent)]
    Train(#[from] TrainSplitterError),
    #[error(transparent)]
    Split(#[from] SplitterError),
    #[error("corpus split index {index} is out of range for {len} documents")]
    IndexOutOfRange { index: usize, len: usize },
}

pub(super) fn pick<'a>(
    corpus: &'a [(Document, GoldLabels)],
    indices: &[usize],
) -> Result<Vec<&'a (Document, GoldLabels)>, AblationError> {
    indices
        .iter()
        .map(|&index| {
            corpus
                .get(index)
                .ok_or(AblationError::IndexOutOfRange { index, len: corpus.len() })
        })
        .collect()
}

/// Runs the six-variant ablation: trains each splitter on `split.train`,
/// scores exact section matches on `split.test`.
///
/// Variants run one after another — the trainer already spreads gradient
/// work across cores — and the report is deterministic for fixed inputs.
pub fn run_ablation(
    corpus: &[(Document, GoldLabels)],
    split: &CorpusSplit,
    train_config: &TrainConfig,
) -> Result<AblationReport, AblationError> {
    let train_docs = pick(corpus, &split.train)?;
    let test_docs = pick(corpus, &split.test)?;

    let gold_spans: Vec<Vec<SectionSpan>> =
        test_docs.iter().map(|(_, gold)| SectionSpan::of_gold(gold)).collect();

    let mut rows = Vec::new();
    for variant in ablation_variants() {
        let model = train_splitter(
            train_docs.iter().map(|(doc, gold)| (doc, gold.line_labels.as_slice())),
            variant.features,
            train_config,
        )?;
        let mut predicted_spans = Vec::with_capacity(test_docs.len());
        for (doc, _) in &test_docs {
            let sections = split_document(&model, doc, variant.features)?;
            predicted_spans.push(SectionSpan::of_predicted(doc, &sections));
        }
        let pairs = predicted_spans
            .iter()
            .zip(&gold_spans)
            .map(|(p, g)| (p.as_slice(), g.as_slice()));
        rows.push(AblationRow {
            variant: variant.name.to_string(),
            scores: section_prf(pairs, MatchMode::Exact),
        });
    }
    Ok(AblationReport { rows })
}

/// Relative change against a baseline, printed the way the published
/// ablation prints its parenthesized deltas: `0.904 → 0.919` is `+1.7%`.
pub fn format_relative_delta(value: f64, baseline: f64) -> String {
    if baseline == 0.0 {
        return "n/a".to_string();
    }
    format!("{:+.1}%", (value / baseline - 1.0) * 100.0)
}

impl AblationReport {
    fn baseline_scores(&self) -> Option<&BTreeMap<SectionType, Metrics>> {
        self.rows.first().filter(|r| r.variant == "baseline").map(|r| &r.scores)
    }

    /// One variant's metrics for one section type.
    pub fn metrics(&self, variant: &str, section_type: SectionType) -> Option<&Metrics> {
        self.rows
            .iter()
            .find(|r| r.variant == variant)
            .and_then(|r| r.scores.get(&section_type))
    }

    /// Renders the grid section-type-major, with relative deltas against
    /// the baseline row (blank on the baseline row itself) and the
    /// published reference results as trailing comment lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "section_type,variant,precision,recall,f1,tp,fp,fn,delta_precision,delta_recall,delta_f1\n",
        );
        let baseline = self.baseline_scores();
        for ty in SectionType::ALL {
            for row in &self.rows {
                let m = row.scores.get(&ty).copied().unwrap_or_default();
                let deltas = match baseline.filter(|_| row.variant != "baseline") {
                    Some(base) => {
                        let b = base.get(&ty).copied().unwrap_or_default();
                        format!(
                            "{},{},{}",
                            format_relative_delta(m.precision(), b.precision()),
                            format_relative_delta(m.recall(), b.recall()),
                            format_relative_delta(m.f1(), b.f1())
                        )
                    }
                    None => ",,".to_string(),
                };
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    ty,
                    row.variant,
                    format_score(m.precision()),
                    format_score(m.recall()),
                    format_score(m.f1()),
                    m.tp,
                    m.fp,
                    m.missed,
                    deltas
                )
                .expect("writing to a String cannot fail");
            }
        }
        out.push_str(
            "# reference: published results on a 510-contract benchmark; context only, not comparable to the synthetic scores above\n",
        );
        for r in &SPLITTER_REFERENCE {
            writeln!(
                out,
                "# reference,{},{},{},{},{}",
                r.section_type,
                r.variant,
                format_score(r.scores.precision),
                format_score(r.scores.recall),
                format_score(r.scores.f1)
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

    #[test]
    fn variant_grid_is_baseline_plus_one_group_each() {
        let variants = ablation_variants();
        assert_eq!(variants[0].name, "baseline");
        assert_eq!(variants[0].features, FeatureConfig::baseline());
        assert_eq!(variants[5].name, "+all_groups");
        assert_eq!(variants[5].features, FeatureConfig::all());
        for v in &variants[1..5] {
            let f = v.features;
            let enabled = [f.page_layout, f.text_placement, f.visual_grouping, f.style]
                .iter()
                .filter(|&&on| on)
                .count();
            assert_eq!(enabled, 1, "{} should enable exactly one group", v.name);
        }
        let mut names: Vec<&str> = variants.iter().map(|v| v.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), 6);
    }

    #[test]
    fn delta_formatting_matches_published_arithmetic() {
        assert_eq!(format_relative_delta(0.919, 0.904), "+1.7%");
        assert_eq!(format_relative_delta(0.899, 0.900), "-0.1%");
        assert_eq!(format_relative_delta(0.897, 0.897), "+0.0%");
        assert_eq!(format_relative_delta(0.857, 0.760), "+12.8%");
        assert_eq!(format_relative_delta(0.5, 0.0), "n/a");
    }

    fn toy_report() -> AblationReport {
        let rows = ablation_variants()
            .iter()
            .enumerate()
            .map(|(i, v)| AblationRow {
                variant: v.name.to_string(),
                scores: SectionType::ALL
                    .iter()
                    .map(|&ty| (ty, Metrics::from_counts(8 + i, 2, 1)))
                    .collect(),
            })
            .collect();
        AblationReport { rows }
    }

    #[test]
    fn csv_is_type_major_with_blank_baseline_deltas_and_reference_footer() {
        let csv = toy_report().to_csv();
        let data: Vec<&str> =
            csv.lines().filter(|l| !l.starts_with('#') && !l.starts_with("section_type,")).collect();
        assert_eq!(data.len(), 24);
        assert!(data[0].starts_with("clause,baseline,"));
        assert!(data[0].ends_with(",,,"), "baseline deltas should be blank: {}", data[0]);
        assert!(data[6].starts_with("subclause,baseline,"));
        assert!(data[1].starts_with("clause,+page_layout,"));
        assert!(!data[1].ends_with(",,"));

        let reference: Vec<&str> = csv.lines().filter(|l| l.starts_with("# reference,")).collect();
        assert_eq!(reference.len(), 24);
        assert!(reference.contains(&"# reference,footer,+all_groups,0.887,0.857,0.872"));
    }

    fn tiny_corpus() -> Vec<(crate::doc::Document, GoldLabels)> {
        let config = GenConfig {
            doc_count: 8,
            mean_words_per_doc: 320,
            ..GenConfig::default()
        };
        generate_corpus(&config).expect("valid config")
    }

    #[test]
    fn ablation_runs_deterministically_on_a_tiny_corpus() {
        let corpus = tiny_corpus();
        let split = corpus_split(corpus.len(), 7);
        let train = TrainConfig { max_iterations: 30, ..TrainConfig::default() };

        let report = run_ablation(&corpus, &split, &train).expect("ablation runs");
        assert_eq!(report.rows.len(), 6);
        for row in &report.rows {
            assert_eq!(row.scores.len(), SectionType::ALL.len());
        }
        assert!(report.metrics("baseline", SectionType::Clause).is_some());
        assert!(report.metrics("nonesuch", SectionType::Clause).is_none());

        let again = run_ablation(&corpus, &split, &train).expect("ablation runs");
        assert_eq!(report.to_csv(), again.to_csv());
    }

    #[test]
    fn out_of_range_split_indices_are_rejected() {
        let corpus = tiny_corpus();
        let mut split = corpus_split(corpus.len(), 7);
        split.test.push(999);
        let err = run_ablation(&corpus, &split, &TrainConfig::default()).unwrap_err();
        assert!(matches!(err, AblationError::IndexOutOfRange { index: 999, .. }));
    }
}
