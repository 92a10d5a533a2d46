//! Pattern-rule baseline for attribute extraction.
//!
//! Instead of the learned two-stage pipeline in [`crate::extract`], a rule
//! file holds hand-written, case-insensitive regular expressions. A rule
//! either answers a yes/no attribute outright ("may terminate at will"
//! anywhere in the contract means termination for convenience is Yes) or
//! captures an answer span for an entity attribute with a single capture
//! group. Rules are tried in file order and the first match wins, so a
//! rule file encodes its own priority: put precise patterns first and
//! catch-alls last.
//!
//! Each rule carries a scope. `whole-document` rules run over the full
//! line stream in reading order, page furniture included; that is fine
//! for yes/no anchors but would let a capture group swallow header and
//! footer text when a sentence straddles a page break, so span rules
//! normally use `clause-sections-only`, which matches against each
//! clause or sub-clause section's stitched clean text instead.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use regex::{Regex, RegexBuilder};
use serde::Deserialize;
use thiserror::Error;

use crate::doc::{lines_in_reading_order, Document};
use crate::extract::{Attribute, AttributeKind, PredictionRecord};
use crate::splitter::{Section, SectionType};

/// What part of a document a rule's pattern runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum RuleScope {
    /// All lines in reading order joined into one string, furniture
    /// lines included.
    #[serde(rename = "whole-document")]
    WholeDocument,
    /// Each clause or sub-clause section's clean text, one unit at a
    /// time in document order.
    #[serde(rename = "clause-sections-only")]
    ClauseSections,
}

impl RuleScope {
    pub fn as_str(&self) -> &'static str {
        match self {
            RuleScope::WholeDocument => "whole-document",
            RuleScope::ClauseSections => "clause-sections-only",
        }
    }
}

/// What a matching rule asserts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleEffect {
    /// The attribute's yes/no answer. Only valid for boolean attributes.
    Answer(bool),
    /// The answer span is the text of the pattern's one capture group.
    /// Only valid for entity attributes.
    Capture,
}

/// One compiled pattern rule.
#[derive(Debug, Clone)]
pub struct Rule {
    pub rule_id: String,
    pub attribute: Attribute,
    /// Compiled case-insensitively from the pattern text in the file.
    pub pattern: Regex,
    pub effect: RuleEffect,
    pub scope: RuleScope,
}

/// An ordered rule collection with unique ids, as loaded from one file.
#[derive(Debug, Clone, Default)]
pub struct RuleSet {
    rules: Vec<Rule>,
}

impl RuleSet {
    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// The rules for one attribute, preserving file order.
    pub fn for_attribute(&self, attribute: Attribute) -> impl Iterator<Item = &Rule> {
        self.rules.iter().filter(move |r| r.attribute == attribute)
    }
}

/// How conflicting boolean matches are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatchPolicy {
    /// The first matching rule in file order decides the answer.
    #[default]
    FirstWins,
    /// Any matching rule means Yes, whatever the rules' own answers say:
    /// every pattern is read as a positive indicator. A recall-oriented
    /// sensitivity setting; entity attributes are unaffected.
    AnyYes,
}

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("cannot read rule file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("rule file line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("rule file line {line}: duplicate rule id {rule_id:?}")]
    DuplicateId { line: usize, rule_id: String },
}

/// One rule as written in the file: a JSON object per line.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleRow {
    rule_id: String,
    attribute: Attribute,
    pattern: String,
    effect: EffectRow,
    scope: RuleScope,
}

/// The `effect` object. Exactly one of the two fields must be present.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EffectRow {
    #[serde(default)]
    answer: Option<bool>,
    #[serde(default)]
    capture: Option<u32>,
}

/// Strip serde_json's own position suffix (it refers to the single line
/// it parsed, not the file) and report the column ourselves.
fn json_error_message(e: &serde_json::Error) -> String {
    let column = e.column();
    let mut message = e.to_string();
    if let Some(pos) = message.rfind(" at line ") {
        message.truncate(pos);
    }
    format!("{message} (column {column})")
}

fn compile_row(row: RuleRow, line: usize) -> Result<Rule, RuleError> {
    let syntax = |message: String| RuleError::Syntax { line, message };

    let effect = match (row.effect.answer, row.effect.capture) {
        (Some(answer), None) => RuleEffect::Answer(answer),
        (None, Some(1)) => RuleEffect::Capture,
        (None, Some(n)) => {
            return Err(syntax(format!("only capture group 1 can be used, not {n}")));
        }
        (None, None) => {
            return Err(syntax("effect needs an \"answer\" or a \"capture\" field".into()));
        }
        (Some(_), Some(_)) => {
            return Err(syntax("effect cannot have both \"answer\" and \"capture\"".into()));
        }
    };
    match (row.attribute.kind(), effect) {
        (AttributeKind::Entity, RuleEffect::Answer(_)) => {
            return Err(syntax(format!(
                "{} names a span, so its rules need a capture effect",
                row.attribute
            )));
        }
        (AttributeKind::Boolean, RuleEffect::Capture) => {
            return Err(syntax(format!(
                "{} is a yes/no question, so its rules need an answer effect",
                row.attribute
            )));
        }
        _ => {}
    }

    let pattern = RegexBuilder::new(&row.pattern)
        .case_insensitive(true)
        .build()
        .map_err(|e| syntax(format!("pattern does not compile: {e}")))?;
    if effect == RuleEffect::Capture && pattern.captures_len() != 2 {
        return Err(syntax(format!(
            "a span rule needs exactly one capture group, found {}",
            pattern.captures_len() - 1
        )));
    }

    Ok(Rule { rule_id: row.rule_id, attribute: row.attribute, pattern, effect, scope: row.scope })
}

/// Parse and compile a rule file from its text. One JSON object per
/// line; blank lines are ignored. Errors carry the 1-based file line.
pub fn parse_rules(text: &str) -> Result<RuleSet, RuleError> {
    let mut rules = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let row: RuleRow = serde_json::from_str(trimmed)
            .map_err(|e| RuleError::Syntax { line, message: json_error_message(&e) })?;
        let rule = compile_row(row, line)?;
        if !seen.insert(rule.rule_id.clone()) {
            return Err(RuleError::DuplicateId { line, rule_id: rule.rule_id });
        }
        rules.push(rule);
    }
    Ok(RuleSet { rules })
}

/// Load and compile a rule file. An empty file is a valid empty set.
pub fn load_rules(path: impl AsRef<Path>) -> Result<RuleSet, RuleError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|source| RuleError::Io { path: path.to_path_buf(), source })?;
    parse_rules(&text)
}

/// One attribute's rule-based answer for one document.
///
/// Mirrors [`crate::extract::AttributePrediction`] except that the answer
/// text is the raw matched capture rather than a token-anchored span — a
/// pattern match carries no token indices. `no_match` plays the role of
/// `no_relevant_section`: no rule fired, so the answer is the default No
/// (boolean) or absent (entity).
#[derive(Debug, Clone, PartialEq)]
pub struct RuleVerdict {
    pub attribute: Attribute,
    /// `rule_id` of the rule that decided the verdict, if any matched.
    pub matched_rule: Option<String>,
    pub span_text: Option<String>,
    pub answer: Option<bool>,
    /// 1.0 on a match; rules are all-or-nothing. On no match, the same
    /// defaults as the learned pipeline's no-relevant-section outcome.
    pub confidence: f64,
    pub no_match: bool,
}

impl RuleVerdict {
    /// The no-rule-fired outcome: No at even odds for yes/no attributes,
    /// absent span for entity attributes.
    pub fn no_match(attribute: Attribute) -> RuleVerdict {
        let (answer, confidence) = match attribute.kind() {
            AttributeKind::Entity => (None, 0.0),
            AttributeKind::Boolean => (Some(false), 0.5),
        };
        RuleVerdict {
            attribute,
            matched_rule: None,
            span_text: None,
            answer,
            confidence,
            no_match: true,
        }
    }

    fn matched(attribute: Attribute, rule: &Rule, capture: Option<String>, answer: Option<bool>) -> RuleVerdict {
        RuleVerdict {
            attribute,
            matched_rule: Some(rule.rule_id.clone()),
            span_text: capture,
            answer,
            confidence: 1.0,
            no_match: false,
        }
    }

    /// This verdict as a prediction-stream row.
    pub fn record(&self, doc_id: impl Into<String>) -> PredictionRecord {
        PredictionRecord {
            doc_id: doc_id.into(),
            attribute: self.attribute,
            span_text: self.span_text.clone(),
            answer: self.answer,
            confidence: self.confidence,
            no_relevant_section: self.no_match,
        }
    }
}

/// All lines in reading order joined with single spaces — what
/// `whole-document` rules match against. Header and footer lines are
/// part of the stream, exactly as OCR read them.
pub fn whole_document_text(doc: &Document) -> String {
    let texts: Vec<String> =
        lines_in_reading_order(doc).iter().map(|(_, line)| line.text()).collect();
    texts.join(" ")
}

/// A rule's match result in one text unit: `None` when the pattern does
/// not match; the capture group's text for span rules (empty if the
/// group did not participate in the match).
fn match_in_unit(rule: &Rule, text: &str) -> Option<Option<String>> {
    match rule.effect {
        RuleEffect::Answer(_) => rule.pattern.is_match(text).then(|| None),
        RuleEffect::Capture => rule.pattern.captures(text).map(|caps| {
            Some(caps.get(1).map_or_else(String::new, |m| m.as_str().to_string()))
        }),
    }
}

/// Run one attribute's rules over a document and its sections.
///
/// Rules are tried in file order; within a `clause-sections-only` rule,
/// sections are tried in document order. Rule order outranks document
/// order: a later rule never overrides an earlier rule's match, so
/// adding rules at the end of a file cannot change documents an earlier
/// rule already decided. `sections` is only consulted by section-scoped
/// rules and may come from the splitter or from gold labels.
pub fn apply_rules(
    rules: &RuleSet,
    doc: &Document,
    sections: &[Section],
    attribute: Attribute,
    policy: MatchPolicy,
) -> RuleVerdict {
    let mut doc_text: Option<String> = None;
    for rule in rules.for_attribute(attribute) {
        let hit = match rule.scope {
            RuleScope::WholeDocument => {
                let text = doc_text.get_or_insert_with(|| whole_document_text(doc));
                match_in_unit(rule, text)
            }
            RuleScope::ClauseSections => sections
                .iter()
                .filter(|s| {
                    matches!(s.section_type, SectionType::Clause | SectionType::Subclause)
                })
                .find_map(|s| match_in_unit(rule, &s.clean_text)),
        };
        let Some(capture) = hit else { continue };
        let answer = match (rule.effect, policy) {
            (RuleEffect::Capture, _) => None,
            (RuleEffect::Answer(a), MatchPolicy::FirstWins) => Some(a),
            // Any match is read as Yes, even from a rule that answers No.
            (RuleEffect::Answer(_), MatchPolicy::AnyYes) => Some(true),
        };
        return RuleVerdict::matched(attribute, rule, capture, answer);
    }
    RuleVerdict::no_match(attribute)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_corpus, GenConfig, TokenSpan};
    use crate::doc::{tokens_in_reading_order, BBox, Block, BlockKind, Line, Page, Token};
    use crate::splitter::assemble_sections;
    use serde_json::json;

    fn rule_line(
        id: &str,
        attribute: &str,
        pattern: &str,
        effect: serde_json::Value,
        scope: &str,
    ) -> String {
        json!({
            "rule_id": id,
            "attribute": attribute,
            "pattern": pattern,
            "effect": effect,
            "scope": scope,
        })
        .to_string()
    }

    fn t4c_rule(id: &str, pattern: &str, answer: bool) -> String {
        rule_line(
            id,
            "termination_for_convenience",
            pattern,
            json!({ "answer": answer }),
            "whole-document",
        )
    }

    /// A one-page document with one single-line paragraph per entry.
    fn doc_of(lines: &[&str]) -> Document {
        let mut y = 72.0;
        let mut blocks = Vec::new();
        for text in lines {
            let tokens: Vec<Token> = text
                .split_whitespace()
                .enumerate()
                .map(|(i, w)| Token {
                    text: w.to_string(),
                    bbox: BBox::from([
                        72.0 + 30.0 * i as f64,
                        y,
                        96.0 + 30.0 * i as f64,
                        y + 10.0,
                    ]),
                    font_size: 10.0,
                    bold: false,
                    italic: false,
                    underline: false,
                })
                .collect();
            let bbox = BBox::from([72.0, y, 540.0, y + 10.0]);
            blocks.push(Block { kind: BlockKind::Paragraph, bbox, lines: vec![Line { bbox, tokens }] });
            y += 14.0;
        }
        Document {
            doc_id: "rule-test-doc".into(),
            source_name: String::new(),
            pages: vec![Page { width: 612.0, height: 792.0, blocks }],
        }
    }

    fn section_of(ty: SectionType, text: &str) -> Section {
        let tokens: Vec<&str> = text.split_whitespace().collect();
        let r = crate::doc::LineRef::new(0, 0, 0);
        Section {
            section_type: ty,
            line_refs: vec![r],
            clean_text: tokens.join(" "),
            token_provenance: (0..tokens.len()).map(|i| (r, i)).collect(),
        }
    }

    #[test]
    fn one_rule_file_parses_and_compiles() {
        let set = parse_rules(&t4c_rule("t4c-at-will", "may terminate at will", true)).unwrap();
        assert_eq!(set.len(), 1);
        let rule = &set.rules()[0];
        assert_eq!(rule.rule_id, "t4c-at-will");
        assert_eq!(rule.attribute, Attribute::TerminationForConvenience);
        assert_eq!(rule.pattern.as_str(), "may terminate at will");
        assert_eq!(rule.effect, RuleEffect::Answer(true));
        assert_eq!(rule.scope, RuleScope::WholeDocument);
    }

    #[test]
    fn empty_file_is_a_valid_empty_rule_set() {
        assert!(parse_rules("").unwrap().is_empty());
        assert!(parse_rules("\n   \n\n").unwrap().is_empty());
    }

    #[test]
    fn duplicate_rule_id_is_rejected_with_its_line() {
        let text = format!(
            "{}\n{}\n",
            t4c_rule("dup", "for convenience", true),
            t4c_rule("dup", "at will", true)
        );
        match parse_rules(&text) {
            Err(RuleError::DuplicateId { line, rule_id }) => {
                assert_eq!(line, 2);
                assert_eq!(rule_id, "dup");
            }
            other => panic!("expected DuplicateId, got {other:?}"),
        }
    }

    #[test]
    fn malformed_rows_report_their_file_line() {
        let text = format!("{}\n\nnot json at all\n", t4c_rule("ok", "at will", true));
        match parse_rules(&text) {
            Err(RuleError::Syntax { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected Syntax, got {other:?}"),
        }

        let bad_pattern = rule_line(
            "r",
            "governing_law",
            "laws of the ([unclosed",
            json!({ "capture": 1 }),
            "clause-sections-only",
        );
        match parse_rules(&bad_pattern) {
            Err(RuleError::Syntax { line, message }) => {
                assert_eq!(line, 1);
                assert!(message.contains("compile"), "unexpected message: {message}");
            }
            other => panic!("expected Syntax, got {other:?}"),
        }

        let bad_attribute =
            rule_line("r", "document_name", "x", json!({ "answer": true }), "whole-document");
        assert!(matches!(parse_rules(&bad_attribute), Err(RuleError::Syntax { line: 1, .. })));

        let bad_scope =
            rule_line("r", "anti_assignment", "x", json!({ "answer": true }), "everywhere");
        assert!(matches!(parse_rules(&bad_scope), Err(RuleError::Syntax { line: 1, .. })));
    }

    #[test]
    fn effect_must_fit_the_attribute_kind() {
        let answer_for_span =
            rule_line("r", "governing_law", "laws of", json!({ "answer": true }), "whole-document");
        match parse_rules(&answer_for_span) {
            Err(RuleError::Syntax { message, .. }) => {
                assert!(message.contains("capture effect"), "unexpected message: {message}")
            }
            other => panic!("expected Syntax, got {other:?}"),
        }

        let capture_for_boolean = rule_line(
            "r",
            "anti_assignment",
            "(may not assign)",
            json!({ "capture": 1 }),
            "whole-document",
        );
        match parse_rules(&capture_for_boolean) {
            Err(RuleError::Syntax { message, .. }) => {
                assert!(message.contains("answer effect"), "unexpected message: {message}")
            }
            other => panic!("expected Syntax, got {other:?}"),
        }

        let group_two = rule_line(
            "r",
            "governing_law",
            "(laws) of (the .*)",
            json!({ "capture": 2 }),
            "whole-document",
        );
        assert!(matches!(parse_rules(&group_two), Err(RuleError::Syntax { .. })));

        let both = rule_line(
            "r",
            "governing_law",
            "(laws of the .*)",
            json!({ "answer": true, "capture": 1 }),
            "whole-document",
        );
        assert!(matches!(parse_rules(&both), Err(RuleError::Syntax { .. })));

        let neither = rule_line("r", "anti_assignment", "x", json!({}), "whole-document");
        assert!(matches!(parse_rules(&neither), Err(RuleError::Syntax { .. })));
    }

    #[test]
    fn span_rules_need_exactly_one_capture_group() {
        let zero = rule_line(
            "r",
            "expiration_date",
            "expires on .*",
            json!({ "capture": 1 }),
            "clause-sections-only",
        );
        match parse_rules(&zero) {
            Err(RuleError::Syntax { message, .. }) => {
                assert!(message.contains("capture group"), "unexpected message: {message}")
            }
            other => panic!("expected Syntax, got {other:?}"),
        }

        let two = rule_line(
            "r",
            "expiration_date",
            "(expires) on (.*)",
            json!({ "capture": 1 }),
            "clause-sections-only",
        );
        assert!(matches!(parse_rules(&two), Err(RuleError::Syntax { .. })));
    }

    #[test]
    fn phrase_rule_answers_yes_for_a_matching_document() {
        let set = parse_rules(&t4c_rule("t4c-at-will", "may terminate at will", true)).unwrap();
        let doc = doc_of(&[
            "12. Termination.",
            "Either party may terminate at will upon notice to the other party.",
        ]);
        let verdict =
            apply_rules(&set, &doc, &[], Attribute::TerminationForConvenience, MatchPolicy::FirstWins);
        assert_eq!(verdict.answer, Some(true));
        assert_eq!(verdict.confidence, 1.0);
        assert_eq!(verdict.matched_rule.as_deref(), Some("t4c-at-will"));
        assert!(!verdict.no_match);

        let record = verdict.record("doc-1");
        assert_eq!(record.answer, Some(true));
        assert!(!record.no_relevant_section);
        assert_eq!(record.span_text, None);
    }

    #[test]
    fn no_match_defaults_to_no_or_absent() {
        let text = format!(
            "{}\n{}\n",
            t4c_rule("t4c", "for convenience", true),
            rule_line(
                "gov",
                "governing_law",
                "laws of the ([^,.]+)",
                json!({ "capture": 1 }),
                "clause-sections-only"
            )
        );
        let set = parse_rules(&text).unwrap();
        let doc = doc_of(&["This document talks about deliveries and invoices only."]);

        let boolean =
            apply_rules(&set, &doc, &[], Attribute::TerminationForConvenience, MatchPolicy::FirstWins);
        assert_eq!(boolean.answer, Some(false));
        assert_eq!(boolean.confidence, 0.5);
        assert!(boolean.no_match);
        assert!(boolean.record("d").no_relevant_section);

        let entity = apply_rules(&set, &doc, &[], Attribute::GoverningLaw, MatchPolicy::FirstWins);
        assert_eq!(entity.span_text, None);
        assert_eq!(entity.answer, None);
        assert_eq!(entity.confidence, 0.0);
        assert!(entity.no_match);
    }

    #[test]
    fn earlier_rules_outrank_later_ones() {
        let doc = doc_of(&["Either party may terminate for cause or for convenience."]);
        let text = format!(
            "{}\n{}\n",
            t4c_rule("narrow-no", "terminate for cause", false),
            t4c_rule("broad-yes", "terminate", true)
        );
        let set = parse_rules(&text).unwrap();

        let first = apply_rules(
            &set,
            &doc,
            &[],
            Attribute::TerminationForConvenience,
            MatchPolicy::FirstWins,
        );
        assert_eq!(first.answer, Some(false));
        assert_eq!(first.matched_rule.as_deref(), Some("narrow-no"));

        // Appending a rule never changes a verdict an earlier rule decided.
        let extended = format!("{}\n{}\n", text.trim_end(), t4c_rule("later", "party", true));
        let larger = parse_rules(&extended).unwrap();
        let again = apply_rules(
            &larger,
            &doc,
            &[],
            Attribute::TerminationForConvenience,
            MatchPolicy::FirstWins,
        );
        assert_eq!(again.answer, first.answer);
        assert_eq!(again.matched_rule, first.matched_rule);
    }

    #[test]
    fn any_match_policy_reads_every_match_as_yes() {
        let doc = doc_of(&["Either party may terminate for cause only."]);
        let set = parse_rules(&t4c_rule("no-rule", "terminate for cause", false)).unwrap();

        let strict =
            apply_rules(&set, &doc, &[], Attribute::TerminationForConvenience, MatchPolicy::FirstWins);
        assert_eq!(strict.answer, Some(false));
        assert!(!strict.no_match);

        let loose =
            apply_rules(&set, &doc, &[], Attribute::TerminationForConvenience, MatchPolicy::AnyYes);
        assert_eq!(loose.answer, Some(true));
        assert_eq!(loose.matched_rule.as_deref(), Some("no-rule"));
    }

    #[test]
    fn capture_rule_pulls_the_span_from_clause_text() {
        let rule = rule_line(
            "gov-laws",
            "governing_law",
            "GOVERNED BY THE LAWS OF THE ([^,.]+)",
            json!({ "capture": 1 }),
            "clause-sections-only",
        );
        let set = parse_rules(&rule).unwrap();
        let sections = vec![
            section_of(SectionType::Header, "Master Services Agreement"),
            section_of(
                SectionType::Clause,
                "14. Governing Law. This Agreement shall be governed by the laws of the State of Ohio.",
            ),
            section_of(SectionType::Footer, "Page 3 of 9"),
        ];
        let doc = doc_of(&["placeholder"]);

        let verdict =
            apply_rules(&set, &doc, &sections, Attribute::GoverningLaw, MatchPolicy::FirstWins);
        assert_eq!(verdict.span_text.as_deref(), Some("State of Ohio"));
        assert_eq!(verdict.confidence, 1.0);
        assert_eq!(verdict.record("d").span_text.as_deref(), Some("State of Ohio"));
    }

    #[test]
    fn clause_scope_ignores_text_outside_clause_sections() {
        let clause_scoped = rule_line(
            "t4c-clause",
            "termination_for_convenience",
            "at will",
            json!({ "answer": true }),
            "clause-sections-only",
        );
        let set = parse_rules(&clause_scoped).unwrap();
        // The phrase appears in a header section only.
        let sections = vec![
            section_of(SectionType::Header, "Termination at will — draft watermark"),
            section_of(SectionType::Clause, "Deliveries are due monthly."),
        ];
        let doc = doc_of(&["Termination at will — draft watermark", "Deliveries are due monthly."]);
        let scoped =
            apply_rules(&set, &doc, &sections, Attribute::TerminationForConvenience, MatchPolicy::FirstWins);
        assert!(scoped.no_match, "header text must not satisfy a clause-scoped rule");

        // The same pattern at whole-document scope sees the furniture line.
        let whole = parse_rules(&t4c_rule("t4c-whole", "at will", true)).unwrap();
        let unscoped =
            apply_rules(&whole, &doc, &sections, Attribute::TerminationForConvenience, MatchPolicy::FirstWins);
        assert_eq!(unscoped.answer, Some(true));
    }

    #[test]
    fn rule_order_outranks_section_order() {
        let text = format!(
            "{}\n{}\n",
            rule_line(
                "second-section",
                "governing_law",
                "laws of the (State of Ohio)",
                json!({ "capture": 1 }),
                "clause-sections-only"
            ),
            rule_line(
                "first-section",
                "governing_law",
                "laws of the (State of Texas)",
                json!({ "capture": 1 }),
                "clause-sections-only"
            )
        );
        let set = parse_rules(&text).unwrap();
        let sections = vec![
            section_of(SectionType::Clause, "Construed per the laws of the State of Texas."),
            section_of(SectionType::Clause, "Governed by the laws of the State of Ohio."),
        ];
        let doc = doc_of(&["placeholder"]);
        let verdict =
            apply_rules(&set, &doc, &sections, Attribute::GoverningLaw, MatchPolicy::FirstWins);
        // The first *rule* wins even though its section comes later.
        assert_eq!(verdict.matched_rule.as_deref(), Some("second-section"));
        assert_eq!(verdict.span_text.as_deref(), Some("State of Ohio"));
    }

    /// The gold span's text read through the body sections, so furniture
    /// tokens inside a page-broken span don't leak in.
    fn gold_span_text(doc: &Document, sections: &[Section], span: &TokenSpan) -> String {
        let body: std::collections::HashSet<(crate::doc::LineRef, usize)> = sections
            .iter()
            .filter(|s| matches!(s.section_type, SectionType::Clause | SectionType::Subclause))
            .flat_map(|s| s.token_provenance.iter().copied())
            .collect();
        let tokens = tokens_in_reading_order(doc);
        let words: Vec<String> = tokens[span.first_token..=span.last_token]
            .iter()
            .filter(|key| body.contains(key))
            .map(|&(r, i)| doc.resolve(r).unwrap().tokens[i].text.clone())
            .collect();
        words.join(" ")
    }

    /// Casefold, collapse whitespace, and trim punctuation at the span
    /// edges: gold tokens keep trailing commas and periods from the
    /// sentence, captures don't.
    fn normalized(s: &str) -> String {
        s.trim_matches(|c: char| !c.is_alphanumeric())
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ")
            .to_lowercase()
    }

    #[test]
    fn starter_rules_recover_generated_answers_with_high_precision() {
        let starter = concat!(env!("CARGO_MANIFEST_DIR"), "/../../rules/starter.jsonl");
        let set = load_rules(starter).expect("starter rule file parses");
        for attribute in Attribute::ALL {
            assert!(
                set.for_attribute(attribute).count() >= 5,
                "starter set is thin for {attribute}"
            );
        }

        let config = GenConfig { seed: 21, doc_count: 12, ..GenConfig::default() };
        let corpus = generate_corpus(&config).unwrap();

        let mut boolean_counts = std::collections::HashMap::new();
        for (doc, gold) in &corpus {
            let sections = assemble_sections(doc, &gold.line_labels).unwrap();
            for attribute in Attribute::ALL {
                let verdict =
                    apply_rules(&set, doc, &sections, attribute, MatchPolicy::FirstWins);
                match attribute {
                    Attribute::ExpirationDate | Attribute::GoverningLaw => {
                        let gold_span = match attribute {
                            Attribute::ExpirationDate => &gold.attributes.expiration_date,
                            _ => &gold.attributes.governing_law,
                        };
                        let expected =
                            gold_span_text(doc, &sections, gold_span.as_ref().unwrap());
                        let got = verdict.span_text.as_deref().unwrap_or("");
                        assert_eq!(
                            normalized(got),
                            normalized(&expected),
                            "{attribute} capture differs from the answer in {}",
                            doc.doc_id
                        );
                    }
                    Attribute::TerminationForConvenience | Attribute::AntiAssignment => {
                        let truth = match attribute {
                            Attribute::TerminationForConvenience => {
                                gold.attributes.termination_for_convenience
                            }
                            _ => gold.attributes.anti_assignment,
                        };
                        let predicted = verdict.answer.unwrap();
                        let entry = boolean_counts
                            .entry(attribute)
                            .or_insert((0usize, 0usize, 0usize)); // (tp, fp, gold yes)
                        if truth {
                            entry.2 += 1;
                        }
                        if predicted && truth {
                            entry.0 += 1;
                        }
                        if predicted && !truth {
                            entry.1 += 1;
                        }
                    }
                }
            }
        }

        for (attribute, (tp, fp, gold_yes)) in boolean_counts {
            assert_eq!(fp, 0, "{attribute}: starter rules fired on a No document");
            assert!(gold_yes > 0, "seed 21 should draw at least one Yes for {attribute}");
            assert!(
                tp > 0,
                "{attribute}: starter rules should recover at least one Yes document"
            );
        }
    }
}
