//! Metrics and experiment harnesses.
//!
//! [`Metrics`] carries confusion counts and derives precision, recall,
//! and F1 — the headline scores here, because both the section types and
//! the contract attributes are heavily imbalanced and plain accuracy
//! rewards predicting the majority class. Section scoring supports an
//! exact mode (type and both line bounds equal) and a more forgiving
//! overlap mode; attribute scoring compares normalized answer text for
//! entity attributes and yes/no answers for boolean ones.
//!
//! The experiment harnesses live in submodules: [`ablation`] retrains
//! the splitter under each feature group, [`doclength`] measures how
//! span extraction degrades with window length, and [`compare`] pits the
//! rule baseline against the learned pipeline end to end. [`reference`]
//! holds the published benchmark results the harnesses print alongside
//! their own numbers.

pub mod ablation;
pub mod compare;
pub mod doclength;
pub mod reference;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{GoldLabels, TokenSpan};
use crate::doc::{tokens_in_reading_order, Document, LineRef};
use crate::extract::{Attribute, AttributeKind, PredictionRecord};
use crate::splitter::{section_records, Section, SectionType};

/// Confusion counts with derived precision/recall/F1.
///
/// `missed` is the false-negative count (`fn` is reserved); `tn` is only
/// meaningful for classification scoring, where it feeds the auxiliary
/// accuracy number.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    pub missed: usize,
    pub tn: usize,
}

impl Metrics {
    pub fn from_counts(tp: usize, fp: usize, missed: usize) -> Metrics {
        Metrics { tp, fp, missed, tn: 0 }
    }

    /// Gold positives: `tp + missed`.
    pub fn support(&self) -> usize {
        self.tp + self.missed
    }

    /// `tp / (tp + fp)`. With no predictions at all the score is vacuous:
    /// 1 if nothing was there to find, 0 if something was missed.
    pub fn precision(&self) -> f64 {
        if self.tp + self.fp == 0 {
            return if self.missed == 0 { 1.0 } else { 0.0 };
        }
        self.tp as f64 / (self.tp + self.fp) as f64
    }

    /// `tp / (tp + missed)`, with the symmetric vacuous convention.
    pub fn recall(&self) -> f64 {
        if self.tp + self.missed == 0 {
            return if self.fp == 0 { 1.0 } else { 0.0 };
        }
        self.tp as f64 / (self.tp + self.missed) as f64
    }

    /// Harmonic mean of precision and recall; 0 when both are 0.
    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    /// `(tp + tn) / total` — auxiliary only; see the module docs for why
    /// accuracy is not a headline score. 1 on an empty count.
    pub fn accuracy(&self) -> f64 {
        let total = self.tp + self.fp + self.missed + self.tn;
        if total == 0 {
            return 1.0;
        }
        (self.tp + self.tn) as f64 / total as f64
    }

    /// Adds another confusion count into this one.
    pub fn absorb(&mut self, other: &Metrics) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.missed += other.missed;
        self.tn += other.tn;
    }
}

/// How predicted sections are matched against gold sections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    /// Type, first line, and last line all equal. The headline mode.
    Exact,
    /// One-to-one matching of same-type sections whose line spans have
    /// Jaccard overlap of at least 0.5.
    Overlap,
}

/// A section reduced to its type and reading-order line span — the unit
/// of section scoring. A section interrupted by page furniture keeps its
/// outer bounds; the span is the closed interval between them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionSpan {
    pub section_type: SectionType,
    pub first_line: usize,
    pub last_line: usize,
}

impl SectionSpan {
    pub fn new(section_type: SectionType, first_line: usize, last_line: usize) -> SectionSpan {
        SectionSpan { section_type, first_line, last_line }
    }

    /// Predicted sections projected to line spans.
    pub fn of_predicted(doc: &Document, sections: &[Section]) -> Vec<SectionSpan> {
        section_records(doc, sections)
            .sections
            .iter()
            .map(|r| SectionSpan::new(r.section_type, r.first_line, r.last_line))
            .collect()
    }

    /// Gold sections projected to line spans.
    pub fn of_gold(gold: &GoldLabels) -> Vec<SectionSpan> {
        gold.sections
            .iter()
            .map(|s| SectionSpan::new(s.section_type, s.first_line, s.last_line))
            .collect()
    }

    fn len(&self) -> usize {
        self.last_line - self.first_line + 1
    }

    /// Line-span Jaccard: intersection over union of the two intervals.
    fn jaccard(&self, other: &SectionSpan) -> f64 {
        let lo = self.first_line.max(other.first_line);
        let hi = self.last_line.min(other.last_line);
        let inter = hi.saturating_sub(lo) + usize::from(hi >= lo);
        let union = self.len() + other.len() - inter;
        inter as f64 / union as f64
    }
}

/// Scores predicted against gold sections over a document set, one
/// [`Metrics`] per section type (every type is present in the result).
///
/// Exact mode counts a true positive only when type and both line bounds
/// agree. Overlap mode matches same-type sections one-to-one, greedily in
/// document order, when their line spans overlap with Jaccard at least
/// 0.5; because sections of one type never overlap each other, no span
/// can clear that threshold with more than two counterparts, so the
/// greedy matching is as large as any one-to-one matching.
pub fn section_prf<'a>(
    pairs: impl IntoIterator<Item = (&'a [SectionSpan], &'a [SectionSpan])>,
    mode: MatchMode,
) -> BTreeMap<SectionType, Metrics> {
    let mut by_type: BTreeMap<SectionType, Metrics> =
        SectionType::ALL.iter().map(|&t| (t, Metrics::default())).collect();
    for (predicted, gold) in pairs {
        for &ty in &SectionType::ALL {
            let pred: Vec<&SectionSpan> =
                predicted.iter().filter(|s| s.section_type == ty).collect();
            let gold: Vec<&SectionSpan> = gold.iter().filter(|s| s.section_type == ty).collect();
            let tp = match mode {
                MatchMode::Exact => pred
                    .iter()
                    .filter(|p| gold.iter().any(|g| (g.first_line, g.last_line) == (p.first_line, p.last_line)))
                    .count(),
                MatchMode::Overlap => {
                    let mut taken = vec![false; gold.len()];
                    let mut matched = 0;
                    for p in &pred {
                        let hit = gold
                            .iter()
                            .enumerate()
                            .find(|(gi, g)| !taken[*gi] && p.jaccard(g) >= 0.5);
                        if let Some((gi, _)) = hit {
                            taken[gi] = true;
                            matched += 1;
                        }
                    }
                    matched
                }
            };
            let cell = by_type.get_mut(&ty).expect("all types preseeded");
            cell.tp += tp;
            cell.fp += pred.len() - tp;
            cell.missed += gold.len() - tp;
        }
    }
    by_type
}

/// Canonical form for answer-text comparison: whitespace collapsed to
/// single spaces, case folded, punctuation stripped from the ends (gold
/// spans keep the sentence's trailing comma or period on their last
/// token; extracted text usually doesn't).
pub fn normalize_answer(s: &str) -> String {
    s.trim_matches(|c: char| !c.is_alphanumeric())
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// One document's ground-truth answer for one attribute.
#[derive(Debug, Clone, PartialEq)]
pub enum GoldAnswer {
    /// Entity attributes: the answer text, absent when the document has
    /// no answer.
    Span(Option<String>),
    YesNo(bool),
}

/// The gold span's text read through the clause/sub-clause sections, so
/// furniture tokens inside a page-broken span don't leak into it.
fn span_text_via_sections(doc: &Document, sections: &[Section], span: &TokenSpan) -> String {
    let body: std::collections::HashSet<(LineRef, usize)> = sections
        .iter()
        .filter(|s| s.section_type.is_body())
        .flat_map(|s| s.token_provenance.iter().copied())
        .collect();
    let tokens = tokens_in_reading_order(doc);
    let words: Vec<String> = tokens[span.first_token..=span.last_token]
        .iter()
        .filter(|key| body.contains(key))
        .map(|&(r, i)| doc.resolve(r).expect("span refs are valid").tokens[i].text.clone())
        .collect();
    words.join(" ")
}

/// Extracts one attribute's ground truth from gold labels. `sections`
/// must be the document's sections as assembled from the gold line
/// labels; they anchor entity span text.
pub fn gold_answer(
    doc: &Document,
    sections: &[Section],
    gold: &GoldLabels,
    attribute: Attribute,
) -> GoldAnswer {
    match attribute {
        Attribute::ExpirationDate | Attribute::GoverningLaw => {
            let span = match attribute {
                Attribute::ExpirationDate => &gold.attributes.expiration_date,
                _ => &gold.attributes.governing_law,
            };
            GoldAnswer::Span(
                span.as_ref().map(|s| span_text_via_sections(doc, sections, s)),
            )
        }
        Attribute::TerminationForConvenience => {
            GoldAnswer::YesNo(gold.attributes.termination_for_convenience)
        }
        Attribute::AntiAssignment => GoldAnswer::YesNo(gold.attributes.anti_assignment),
    }
}

#[derive(Debug, Error)]
pub enum AlignmentError {
    #[error("no {attribute} prediction for document {doc_id}")]
    MissingPrediction { doc_id: String, attribute: Attribute },
    #[error("{attribute} prediction for unknown document {doc_id}")]
    UnknownDocument { doc_id: String, attribute: Attribute },
    #[error("more than one {attribute} prediction for document {doc_id}")]
    DuplicatePrediction { doc_id: String, attribute: Attribute },
    #[error("document {doc_id}: {message}")]
    MalformedPrediction { doc_id: String, message: String },
}

/// Scores one attribute's predictions against ground truth.
///
/// `golds` pairs each document id with its answer; predictions for other
/// attributes are ignored, but the kept ones must align one-to-one with
/// `golds`. Boolean attributes score Yes as the positive class. Entity
/// attributes count a true positive only when the normalized extracted
/// text equals the normalized gold text; an extraction with the wrong
/// text is both a false positive and a miss.
pub fn attribute_prf(
    predictions: &[PredictionRecord],
    golds: &[(String, GoldAnswer)],
    attribute: Attribute,
) -> Result<Metrics, AlignmentError> {
    let mut by_doc: BTreeMap<&str, &PredictionRecord> = BTreeMap::new();
    for record in predictions.iter().filter(|r| r.attribute == attribute) {
        let doc_id = record.doc_id.as_str();
        if !golds.iter().any(|(id, _)| id == doc_id) {
            return Err(AlignmentError::UnknownDocument { doc_id: doc_id.into(), attribute });
        }
        if by_doc.insert(doc_id, record).is_some() {
            return Err(AlignmentError::DuplicatePrediction { doc_id: doc_id.into(), attribute });
        }
    }

    let mut metrics = Metrics::default();
    for (doc_id, gold) in golds {
        let record = by_doc.remove(doc_id.as_str()).ok_or_else(|| {
            AlignmentError::MissingPrediction { doc_id: doc_id.clone(), attribute }
        })?;
        match (gold, attribute.kind()) {
            (GoldAnswer::YesNo(truth), AttributeKind::Boolean) => {
                let answer = record.answer.ok_or_else(|| AlignmentError::MalformedPrediction {
                    doc_id: doc_id.clone(),
                    message: format!("{attribute} prediction carries no yes/no answer"),
                })?;
                match (answer, truth) {
                    (true, true) => metrics.tp += 1,
                    (true, false) => metrics.fp += 1,
                    (false, true) => metrics.missed += 1,
                    (false, false) => metrics.tn += 1,
                }
            }
            (GoldAnswer::Span(truth), AttributeKind::Entity) => {
                match (&record.span_text, truth) {
                    (Some(got), Some(want)) => {
                        if normalize_answer(got) == normalize_answer(want) {
                            metrics.tp += 1;
                        } else {
                            metrics.fp += 1;
                            metrics.missed += 1;
                        }
                    }
                    (Some(_), None) => metrics.fp += 1,
                    (None, Some(_)) => metrics.missed += 1,
                    (None, None) => metrics.tn += 1,
                }
            }
            _ => {
                return Err(AlignmentError::MalformedPrediction {
                    doc_id: doc_id.clone(),
                    message: format!("gold answer kind does not fit {attribute}"),
                });
            }
        }
    }
    Ok(metrics)
}

/// Scores in three decimals, the precision the published benchmark
/// results use.
pub fn format_score(value: f64) -> String {
    format!("{value:.3}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn metric_identities_hold() {
        let m = Metrics::from_counts(8, 2, 4);
        assert!((m.precision() - 0.8).abs() < 1e-12);
        assert!((m.recall() - 8.0 / 12.0).abs() < 1e-12);
        let p = m.precision();
        let r = m.recall();
        assert!((m.f1() - 2.0 * p * r / (p + r)).abs() < 1e-12);
        assert_eq!(m.support(), 12);

        // Vacuous conventions.
        assert_eq!(Metrics::default().precision(), 1.0);
        assert_eq!(Metrics::default().recall(), 1.0);
        assert_eq!(Metrics::from_counts(0, 0, 3).precision(), 0.0);
        assert_eq!(Metrics::from_counts(0, 0, 3).recall(), 0.0);
        assert_eq!(Metrics::from_counts(0, 0, 3).f1(), 0.0);
        assert_eq!(Metrics::from_counts(0, 2, 0).recall(), 0.0);
    }

    #[test]
    fn class_imbalance_makes_accuracy_misleading() {
        // 510 documents, 15 of them positive, and a predictor that always
        // answers No: high accuracy, zero recall.
        let all_no = Metrics { tp: 0, fp: 0, missed: 15, tn: 495 };
        assert_eq!(all_no.recall(), 0.0);
        assert_eq!(all_no.precision(), 0.0);
        assert!((all_no.accuracy() - 0.97).abs() < 0.001);
        assert_eq!(format!("{:.2}", all_no.accuracy()), "0.97");
    }

    fn spans(list: &[(SectionType, usize, usize)]) -> Vec<SectionSpan> {
        list.iter().map(|&(t, a, b)| SectionSpan::new(t, a, b)).collect()
    }

    #[test]
    fn identical_predictions_score_perfectly() {
        let gold = spans(&[
            (SectionType::Clause, 0, 4),
            (SectionType::Clause, 5, 9),
            (SectionType::Subclause, 10, 11),
            (SectionType::Header, 12, 12),
            (SectionType::Footer, 13, 13),
        ]);
        for mode in [MatchMode::Exact, MatchMode::Overlap] {
            let scores = section_prf([(gold.as_slice(), gold.as_slice())], mode);
            for (ty, m) in &scores {
                assert_eq!(m.precision(), 1.0, "{ty:?} precision");
                assert_eq!(m.recall(), 1.0, "{ty:?} recall");
                assert_eq!(m.f1(), 1.0, "{ty:?} f1");
            }
        }
    }

    #[test]
    fn no_predictions_score_zero_against_nonempty_gold() {
        let gold = spans(&[(SectionType::Clause, 0, 3)]);
        let scores = section_prf([(&[] as &[SectionSpan], gold.as_slice())], MatchMode::Exact);
        let clause = &scores[&SectionType::Clause];
        assert_eq!(clause.precision(), 0.0);
        assert_eq!(clause.recall(), 0.0);
        assert_eq!(clause.f1(), 0.0);
        // Types with nothing on either side stay vacuous-perfect.
        assert_eq!(scores[&SectionType::Footer].f1(), 1.0);
    }

    #[test]
    fn overlap_forgives_shifted_bounds_that_exact_rejects() {
        let gold = spans(&[(SectionType::Clause, 0, 9)]);
        let close = spans(&[(SectionType::Clause, 0, 8)]); // Jaccard 0.9
        let exact = section_prf([(close.as_slice(), gold.as_slice())], MatchMode::Exact);
        let overlap = section_prf([(close.as_slice(), gold.as_slice())], MatchMode::Overlap);
        assert_eq!(exact[&SectionType::Clause].tp, 0);
        assert_eq!(overlap[&SectionType::Clause].tp, 1);

        let far = spans(&[(SectionType::Clause, 6, 20)]); // Jaccard 4/21
        let overlap = section_prf([(far.as_slice(), gold.as_slice())], MatchMode::Overlap);
        assert_eq!(overlap[&SectionType::Clause].tp, 0);
    }

    #[test]
    fn split_prediction_matches_only_one_half_of_the_gold() {
        // One gold section split into two predictions, each covering
        // exactly half: both sit at the 0.5 threshold but only one can
        // claim the gold section.
        let gold = spans(&[(SectionType::Clause, 0, 9)]);
        let halves = spans(&[(SectionType::Clause, 0, 4), (SectionType::Clause, 5, 9)]);
        let scores = section_prf([(halves.as_slice(), gold.as_slice())], MatchMode::Overlap);
        let m = &scores[&SectionType::Clause];
        assert_eq!((m.tp, m.fp, m.missed), (1, 1, 0));
    }

    /// All one-to-one matchings, by brute force: the largest number of
    /// (predicted, gold) pairs with Jaccard ≥ 0.5.
    fn best_matching(pred: &[SectionSpan], gold: &[SectionSpan]) -> usize {
        fn go(pred: &[SectionSpan], gold: &[SectionSpan], used: &mut Vec<bool>, k: usize) -> usize {
            if k == pred.len() {
                return 0;
            }
            // Either leave pred[k] unmatched...
            let mut best = go(pred, gold, used, k + 1);
            // ...or match it with any free gold section above threshold.
            for (gi, g) in gold.iter().enumerate() {
                if !used[gi] && pred[k].jaccard(g) >= 0.5 {
                    used[gi] = true;
                    best = best.max(1 + go(pred, gold, used, k + 1));
                    used[gi] = false;
                }
            }
            best
        }
        go(pred, gold, &mut vec![false; gold.len()], 0)
    }

    /// Random disjoint same-type spans, the shape real section lists
    /// have (sections of one type never overlap).
    fn random_spans(rng: &mut StdRng, ty: SectionType) -> Vec<SectionSpan> {
        let n = rng.gen_range(0..=6);
        let mut cursor = 0usize;
        let mut out = Vec::new();
        for _ in 0..n {
            cursor += rng.gen_range(0..3);
            let len = rng.gen_range(1..=6);
            out.push(SectionSpan::new(ty, cursor, cursor + len - 1));
            cursor += len;
        }
        out
    }

    #[test]
    fn greedy_overlap_matching_equals_the_enumerated_optimum() {
        let mut rng = StdRng::seed_from_u64(97);
        for _ in 0..300 {
            let pred = random_spans(&mut rng, SectionType::Clause);
            let gold = random_spans(&mut rng, SectionType::Clause);
            let scores = section_prf([(pred.as_slice(), gold.as_slice())], MatchMode::Overlap);
            let greedy_tp = scores[&SectionType::Clause].tp;
            assert_eq!(
                greedy_tp,
                best_matching(&pred, &gold),
                "greedy fell short on pred={pred:?} gold={gold:?}"
            );
        }
    }

    #[test]
    fn exact_f1_never_beats_overlap_f1() {
        let mut rng = StdRng::seed_from_u64(98);
        for _ in 0..200 {
            let pred = random_spans(&mut rng, SectionType::Subclause);
            let gold = random_spans(&mut rng, SectionType::Subclause);
            let exact = section_prf([(pred.as_slice(), gold.as_slice())], MatchMode::Exact);
            let overlap = section_prf([(pred.as_slice(), gold.as_slice())], MatchMode::Overlap);
            let ty = SectionType::Subclause;
            assert!(
                exact[&ty].f1() <= overlap[&ty].f1() + 1e-12,
                "exact beat overlap on pred={pred:?} gold={gold:?}"
            );
        }
    }

    #[test]
    fn answers_normalize_for_comparison() {
        assert_eq!(normalize_answer("State of Ohio,"), "state of ohio");
        assert_eq!(normalize_answer("  March 3,   2019. "), "march 3, 2019");
        assert_eq!(normalize_answer("(State of Ohio)"), "state of ohio");
        assert_eq!(normalize_answer(""), "");
    }

    fn prediction(
        doc_id: &str,
        attribute: Attribute,
        span_text: Option<&str>,
        answer: Option<bool>,
    ) -> PredictionRecord {
        PredictionRecord {
            doc_id: doc_id.into(),
            attribute,
            span_text: span_text.map(String::from),
            answer,
            confidence: 1.0,
            no_relevant_section: span_text.is_none() && answer != Some(true),
        }
    }

    #[test]
    fn entity_scoring_compares_normalized_text() {
        let attribute = Attribute::GoverningLaw;
        let golds = vec![
            ("a".to_string(), GoldAnswer::Span(Some("State of Ohio,".into()))),
            ("b".to_string(), GoldAnswer::Span(Some("State of Texas".into()))),
            ("c".to_string(), GoldAnswer::Span(Some("Province of Ontario".into()))),
        ];
        let predictions = vec![
            prediction("a", attribute, Some("state of ohio"), None),
            prediction("b", attribute, Some("State of Delaware"), None),
            prediction("c", attribute, None, None),
            // A row for another attribute is ignored.
            prediction("a", Attribute::ExpirationDate, Some("March 3, 2019"), None),
        ];
        let m = attribute_prf(&predictions, &golds, attribute).unwrap();
        assert_eq!((m.tp, m.fp, m.missed), (1, 1, 2));
    }

    #[test]
    fn misaligned_predictions_are_rejected() {
        let attribute = Attribute::AntiAssignment;
        let golds = vec![("a".to_string(), GoldAnswer::YesNo(true))];

        let missing = attribute_prf(&[], &golds, attribute);
        assert!(matches!(missing, Err(AlignmentError::MissingPrediction { .. })));

        let unknown = attribute_prf(
            &[prediction("ghost", attribute, None, Some(true))],
            &golds,
            attribute,
        );
        assert!(matches!(unknown, Err(AlignmentError::UnknownDocument { .. })));

        let twice = vec![
            prediction("a", attribute, None, Some(true)),
            prediction("a", attribute, None, Some(false)),
        ];
        let duplicate = attribute_prf(&twice, &golds, attribute);
        assert!(matches!(duplicate, Err(AlignmentError::DuplicatePrediction { .. })));
    }

    #[test]
    fn boolean_scoring_matches_an_independent_recount() {
        let attribute = Attribute::TerminationForConvenience;
        let mut rng = StdRng::seed_from_u64(99);
        for _ in 0..20 {
            let n = rng.gen_range(1..40);
            let golds: Vec<(String, GoldAnswer)> =
                (0..n).map(|i| (format!("doc{i}"), GoldAnswer::YesNo(rng.gen_bool(0.3)))).collect();
            let answers: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            let predictions: Vec<PredictionRecord> = golds
                .iter()
                .zip(&answers)
                .map(|((id, _), &a)| prediction(id, attribute, None, Some(a)))
                .collect();

            let m = attribute_prf(&predictions, &golds, attribute).unwrap();

            let (mut tp, mut fp, mut missed, mut tn) = (0, 0, 0, 0);
            for ((_, gold), &answer) in golds.iter().zip(&answers) {
                let truth = matches!(gold, GoldAnswer::YesNo(true));
                match (answer, truth) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => missed += 1,
                    (false, false) => tn += 1,
                }
            }
            assert_eq!((m.tp, m.fp, m.missed, m.tn), (tp, fp, missed, tn));
            assert_eq!(m.support(), tp + missed);
        }
    }
}
