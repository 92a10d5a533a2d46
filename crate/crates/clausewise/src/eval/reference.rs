//! Published benchmark results embedded for context.
//!
//! These numbers were reported on a benchmark of 510 English-language
//! commercial contracts whose attribute labels are not redistributable,
//! so this toolkit cannot re-run them. Experiment reports print them in
//! clearly marked reference rows next to the synthetic-corpus results;
//! nothing here is ever asserted against, or compared numerically to,
//! what this toolkit computes.

use crate::extract::Attribute;
use crate::splitter::SectionType;

/// One precision/recall/F1 triple as published (three decimals or two,
/// exactly as reported).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferencePrf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

const fn prf(precision: f64, recall: f64, f1: f64) -> ReferencePrf {
    ReferencePrf { precision, recall, f1 }
}

/// Section-splitting scores per feature variant and section type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitterReferenceRow {
    /// Feature variant name, matching [`super::ablation`] row names.
    pub variant: &'static str,
    pub section_type: SectionType,
    pub scores: ReferencePrf,
}

const fn splitter_row(
    variant: &'static str,
    section_type: SectionType,
    scores: ReferencePrf,
) -> SplitterReferenceRow {
    SplitterReferenceRow { variant, section_type, scores }
}

/// The published section-splitting ablation: six feature variants scored
/// per section type on the benchmark's held-out split.
pub const SPLITTER_REFERENCE: [SplitterReferenceRow; 24] = [
    splitter_row("baseline", SectionType::Clause, prf(0.904, 0.897, 0.900)),
    splitter_row("+page_layout", SectionType::Clause, prf(0.902, 0.897, 0.899)),
    splitter_row("+text_placement", SectionType::Clause, prf(0.908, 0.897, 0.902)),
    splitter_row("+visual_grouping", SectionType::Clause, prf(0.912, 0.899, 0.905)),
    splitter_row("+style", SectionType::Clause, prf(0.917, 0.902, 0.909)),
    splitter_row("+all_groups", SectionType::Clause, prf(0.919, 0.901, 0.910)),
    splitter_row("baseline", SectionType::Subclause, prf(0.901, 0.913, 0.907)),
    splitter_row("+page_layout", SectionType::Subclause, prf(0.900, 0.913, 0.906)),
    splitter_row("+text_placement", SectionType::Subclause, prf(0.901, 0.913, 0.907)),
    splitter_row("+visual_grouping", SectionType::Subclause, prf(0.904, 0.914, 0.909)),
    splitter_row("+style", SectionType::Subclause, prf(0.908, 0.913, 0.910)),
    splitter_row("+all_groups", SectionType::Subclause, prf(0.910, 0.913, 0.911)),
    splitter_row("baseline", SectionType::Header, prf(0.900, 0.956, 0.927)),
    splitter_row("+page_layout", SectionType::Header, prf(0.840, 0.961, 0.896)),
    splitter_row("+text_placement", SectionType::Header, prf(0.845, 0.955, 0.897)),
    splitter_row("+visual_grouping", SectionType::Header, prf(0.910, 0.958, 0.933)),
    splitter_row("+style", SectionType::Header, prf(0.890, 0.956, 0.922)),
    splitter_row("+all_groups", SectionType::Header, prf(0.858, 0.960, 0.906)),
    splitter_row("baseline", SectionType::Footer, prf(0.845, 0.760, 0.800)),
    splitter_row("+page_layout", SectionType::Footer, prf(0.877, 0.862, 0.869)),
    splitter_row("+text_placement", SectionType::Footer, prf(0.849, 0.792, 0.820)),
    splitter_row("+visual_grouping", SectionType::Footer, prf(0.855, 0.834, 0.844)),
    splitter_row("+style", SectionType::Footer, prf(0.843, 0.757, 0.798)),
    splitter_row("+all_groups", SectionType::Footer, prf(0.887, 0.857, 0.872)),
];

/// End-to-end attribute scores per published system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineReferenceRow {
    /// `"rules"`, `"pretrained-reader"`, or `"sectioned-pipeline"`.
    pub pipeline: &'static str,
    pub attribute: Attribute,
    pub scores: ReferencePrf,
}

const fn pipeline_row(
    pipeline: &'static str,
    attribute: Attribute,
    scores: ReferencePrf,
) -> PipelineReferenceRow {
    PipelineReferenceRow { pipeline, attribute, scores }
}

/// The published end-to-end comparison: hand-written expert rules, a
/// fine-tuned pretrained reader scored at 80% recall over the full
/// document text, and the section-splitting pipeline.
pub const END_TO_END_REFERENCE: [PipelineReferenceRow; 12] = [
    pipeline_row("rules", Attribute::ExpirationDate, prf(0.77, 0.64, 0.70)),
    pipeline_row("rules", Attribute::GoverningLaw, prf(0.75, 0.60, 0.67)),
    pipeline_row("rules", Attribute::TerminationForConvenience, prf(0.80, 0.44, 0.57)),
    pipeline_row("rules", Attribute::AntiAssignment, prf(0.83, 0.57, 0.68)),
    pipeline_row("pretrained-reader", Attribute::ExpirationDate, prf(0.86, 0.80, 0.83)),
    pipeline_row("pretrained-reader", Attribute::GoverningLaw, prf(0.97, 0.80, 0.88)),
    pipeline_row("pretrained-reader", Attribute::TerminationForConvenience, prf(0.37, 0.80, 0.51)),
    pipeline_row("pretrained-reader", Attribute::AntiAssignment, prf(0.76, 0.80, 0.78)),
    pipeline_row("sectioned-pipeline", Attribute::ExpirationDate, prf(0.87, 0.87, 0.87)),
    pipeline_row("sectioned-pipeline", Attribute::GoverningLaw, prf(0.98, 0.98, 0.98)),
    pipeline_row("sectioned-pipeline", Attribute::TerminationForConvenience, prf(0.77, 0.75, 0.76)),
    pipeline_row("sectioned-pipeline", Attribute::AntiAssignment, prf(0.89, 0.88, 0.89)),
];

/// Published Anti-Assignment scores with and without visual cues in the
/// section splitter feeding the classifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisualImpactReferenceRow {
    /// `"baseline-split"` or `"visual-split"`.
    pub sections: &'static str,
    pub scores: ReferencePrf,
}

pub const ANTI_ASSIGNMENT_VISUAL_REFERENCE: [VisualImpactReferenceRow; 2] = [
    VisualImpactReferenceRow { sections: "baseline-split", scores: prf(0.89, 0.69, 0.71) },
    VisualImpactReferenceRow { sections: "visual-split", scores: prf(0.93, 0.81, 0.85) },
];

/// Size and length statistics of the reference benchmark. The synthetic
/// corpus defaults mirror the mean word count and the 80/10/10 split.
pub const BENCHMARK_DOC_COUNT: usize = 510;
pub const BENCHMARK_TRAIN_DOCS: usize = 408;
pub const BENCHMARK_DEV_DOCS: usize = 51;
pub const BENCHMARK_TEST_DOCS: usize = 51;
pub const BENCHMARK_MEAN_WORDS: usize = 9_594;
pub const BENCHMARK_MEAN_CHARS: usize = 52_563;
pub const BENCHMARK_MIN_WORDS: usize = 109;
pub const BENCHMARK_MAX_WORDS: usize = 103_923;
