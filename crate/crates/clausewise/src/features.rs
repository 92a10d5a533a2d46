//! Sparse, named feature extraction for lines and for section tokens.
//!
//! Every feature name is namespaced `group:feature[=value]` so that feature
//! groups can be toggled independently and models can record exactly which
//! groups they were trained with. The line-level groups are:
//!
//! * `baseline` — textual cues plus reading-order context; always enabled.
//! * `page_layout` — proximity of the line to regions of the page.
//! * `text_placement` — horizontal placement (centering, indentation).
//! * `visual_grouping` — the OCR block the line belongs to.
//! * `style` — bold/italic/underline coverage and relative font size.
//!
//! Token-level features (used by the span extractors) live in the `tok:`
//! namespace, with `style:` flags appended when the style group is enabled.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::doc::{Document, InvalidRef, Line, LineRef, ReadingOrder};
use crate::splitter::Section;

/// A sparse feature vector: feature name to weight.
///
/// Zero weights are never stored, names are ASCII without whitespace, and the
/// map is ordered so serialization is stable.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector {
    entries: BTreeMap<String, f64>,
}

impl FeatureVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets `name` to `weight`, dropping the entry when the weight is zero.
    pub fn set(&mut self, name: impl Into<String>, weight: f64) {
        let name = name.into();
        debug_assert!(name.is_ascii() && !name.contains(char::is_whitespace));
        if weight == 0.0 {
            self.entries.remove(&name);
        } else {
            self.entries.insert(name, weight);
        }
    }

    /// Sets a unit-weight indicator feature.
    pub fn flag(&mut self, name: impl Into<String>) {
        self.set(name, 1.0);
    }

    pub fn get(&self, name: &str) -> f64 {
        self.entries.get(name).copied().unwrap_or(0.0)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// The entries whose namespace (the part before `:`) is `group`.
    pub fn in_group<'a>(&'a self, group: &'a str) -> impl Iterator<Item = (&'a str, f64)> + 'a {
        self.iter()
            .filter(move |(name, _)| name.split(':').next() == Some(group))
    }
}

impl fmt::Display for FeatureVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (name, w) in self.iter() {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            if w == 1.0 {
                write!(f, "{name}")?;
            } else {
                write!(f, "{name}:{w}")?;
            }
        }
        Ok(())
    }
}

/// Which feature groups are active. The baseline group is always on; the four
/// visual groups are opt-in so ablations can add them one at a time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub page_layout: bool,
    pub text_placement: bool,
    pub visual_grouping: bool,
    pub style: bool,
}

impl Default for FeatureConfig {
    /// All groups enabled — the full model.
    fn default() -> Self {
        Self::all()
    }
}

impl FeatureConfig {
    /// Baseline only: no visual groups.
    pub fn baseline() -> Self {
        FeatureConfig {
            page_layout: false,
            text_placement: false,
            visual_grouping: false,
            style: false,
        }
    }

    /// Every group enabled.
    pub fn all() -> Self {
        FeatureConfig {
            page_layout: true,
            text_placement: true,
            visual_grouping: true,
            style: true,
        }
    }

    /// The enabled group names in sorted order, always including `baseline`.
    pub fn enabled_groups(&self) -> Vec<&'static str> {
        let mut groups = vec!["baseline"];
        if self.page_layout {
            groups.push("page_layout");
        }
        if self.style {
            groups.push("style");
        }
        if self.text_placement {
            groups.push("text_placement");
        }
        if self.visual_grouping {
            groups.push("visual_grouping");
        }
        groups
    }

    /// Stable identifier for this group selection, e.g.
    /// `baseline+page_layout+style`. Stored inside trained models so a model
    /// is never applied with features it was not trained on.
    pub fn fingerprint(&self) -> String {
        self.enabled_groups().join("+")
    }
}

/// The document's dominant font size, used to normalize style features.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyFontEstimate {
    /// Most frequent token font size, rounded to 0.5pt; ties break toward
    /// the smaller size.
    pub body_font_size: f64,
}

/// The document contains no tokens, so no body font can be estimated.
#[derive(Debug, Error)]
#[error("document has no tokens")]
pub struct EmptyDocument;

/// Estimates the body font as the mode of token font sizes rounded to 0.5pt,
/// breaking ties toward the smaller size.
pub fn estimate_body_font(doc: &Document) -> Result<BodyFontEstimate, EmptyDocument> {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for page in &doc.pages {
        for block in &page.blocks {
            for line in &block.lines {
                for token in &line.tokens {
                    let half_points = (token.font_size * 2.0).round() as i64;
                    *counts.entry(half_points).or_insert(0) += 1;
                }
            }
        }
    }
    let mut best: Option<(i64, usize)> = None;
    for (&size, &count) in &counts {
        // Strictly greater keeps the smallest size on ties: the map iterates
        // in ascending size order.
        if best.map_or(true, |(_, c)| count > c) {
            best = Some((size, count));
        }
    }
    match best {
        Some((half_points, _)) => Ok(BodyFontEstimate {
            body_font_size: half_points as f64 / 2.0,
        }),
        None => Err(EmptyDocument),
    }
}

/// Token index is outside the section's token stream.
#[derive(Debug, Error)]
pub enum TokenFeatureError {
    #[error(transparent)]
    InvalidRef(#[from] InvalidRef),
    #[error("token index {index} out of range for a section with {len} tokens")]
    OutOfRange { index: usize, len: usize },
}

/// Per-document context for line feature extraction.
///
/// Caches the reading order, body font, and per-page extents so extracting
/// features for every line of a document stays linear in the line count.
pub struct DocumentFeatures<'a> {
    doc: &'a Document,
    config: FeatureConfig,
    body: BodyFontEstimate,
    order: ReadingOrder,
    /// Per page: (min line x0, max line x1) over the page's lines.
    extents: Vec<(f64, f64)>,
    /// Per page: first and last line on the page, in reading order.
    edges: Vec<(Option<LineRef>, Option<LineRef>)>,
}

impl<'a> DocumentFeatures<'a> {
    /// Builds the context, estimating the body font from the document.
    pub fn new(doc: &'a Document, config: FeatureConfig) -> Result<Self, EmptyDocument> {
        let body = estimate_body_font(doc)?;
        Ok(Self::with_body(doc, config, body))
    }

    /// Builds the context with a caller-supplied body font estimate.
    pub fn with_body(doc: &'a Document, config: FeatureConfig, body: BodyFontEstimate) -> Self {
        let order = ReadingOrder::of(doc);
        let mut extents = vec![(f64::INFINITY, f64::NEG_INFINITY); doc.pages.len()];
        for (page_index, page) in doc.pages.iter().enumerate() {
            for block in &page.blocks {
                for line in &block.lines {
                    let (min_x0, max_x1) = &mut extents[page_index];
                    *min_x0 = min_x0.min(line.bbox.x0);
                    *max_x1 = max_x1.max(line.bbox.x1);
                }
            }
        }
        let mut edges = vec![(None, None); doc.pages.len()];
        for r in order.refs() {
            let (first, last) = &mut edges[r.page];
            if first.is_none() {
                *first = Some(*r);
            }
            *last = Some(*r);
        }
        DocumentFeatures {
            doc,
            config,
            body,
            order,
            extents,
            edges,
        }
    }

    pub fn config(&self) -> FeatureConfig {
        self.config
    }

    pub fn body_font(&self) -> BodyFontEstimate {
        self.body
    }

    pub fn order(&self) -> &ReadingOrder {
        &self.order
    }

    /// Features for every line, in reading order — one vector per line.
    pub fn sequence(&self) -> Vec<FeatureVector> {
        self.order
            .refs()
            .iter()
            .map(|r| {
                self.line_features(*r)
                    .expect("reading-order refs are valid by construction")
            })
            .collect()
    }

    /// Extracts the enabled feature groups for one line.
    pub fn line_features(&self, r: LineRef) -> Result<FeatureVector, InvalidRef> {
        let line = self.doc.resolve(r)?;
        let mut fv = FeatureVector::new();
        self.baseline_features(r, line, &mut fv);
        if self.config.page_layout {
            self.page_layout_features(r, line, &mut fv);
        }
        if self.config.text_placement {
            self.text_placement_features(r, line, &mut fv);
        }
        if self.config.visual_grouping {
            self.visual_grouping_features(r, &mut fv);
        }
        if self.config.style {
            self.style_features(line, &mut fv);
        }
        Ok(fv)
    }

    fn baseline_features(&self, r: LineRef, line: &Line, fv: &mut FeatureVector) {
        for (i, token) in line.tokens.iter().take(3).enumerate() {
            fv.flag(format!("baseline:w{i}={}", sanitize(&token.text.to_lowercase())));
        }
        if let Some(first) = line.tokens.first() {
            fv.flag(format!("baseline:shape0={}", line_shape(&first.text)));
            if line_shape(&first.text) == "d.d" {
                fv.flag("baseline:num_decimal");
            }
            if line_shape(&first.text) == "(a)" {
                fv.flag("baseline:num_paren");
            }
            let keyword = first
                .text
                .trim_end_matches(['.', ':'])
                .to_lowercase();
            if keyword == "section" || keyword == "article" {
                fv.flag("baseline:num_keyword");
            }
        }
        fv.flag(format!("baseline:len={}", length_bucket(line.tokens.len())));
        if line.text().trim_end().ends_with(':') {
            fv.flag("baseline:ends_colon");
        }
        fv.flag(format!("baseline:caps={}", caps_bucket(line)));
        let has_digit = line
            .tokens
            .iter()
            .any(|t| t.text.chars().any(|c| c.is_ascii_digit()));
        if has_digit {
            fv.flag("baseline:has_digit");
        }
        let pos = self
            .order
            .position(r)
            .expect("resolved line is in reading order");
        let neighbor = |offset: isize, sentinel: &str| -> String {
            let idx = pos as isize + offset;
            if idx < 0 {
                return sentinel.to_string();
            }
            match self.order.at(idx as usize) {
                Some(n) => self
                    .doc
                    .line(n)
                    .and_then(|l| l.token_lower(0))
                    .map(|t| sanitize(&t))
                    .unwrap_or_else(|| sentinel.to_string()),
                None => sentinel.to_string(),
            }
        };
        fv.flag(format!("baseline:prev0={}", neighbor(-1, "<bos>")));
        fv.flag(format!("baseline:next0={}", neighbor(1, "<eos>")));
    }

    fn page_layout_features(&self, r: LineRef, line: &Line, fv: &mut FeatureVector) {
        let page = &self.doc.pages[r.page];
        let decile = ((line.bbox.y_center() / page.height) * 10.0).floor();
        let decile = (decile as i64).clamp(0, 9);
        fv.flag(format!("page_layout:ydecile={decile}"));
        let (first, last) = self.edges[r.page];
        if first == Some(r) {
            fv.flag("page_layout:first_on_page");
        }
        if last == Some(r) {
            fv.flag("page_layout:last_on_page");
        }
        if line.bbox.y0 < 0.10 * page.height {
            fv.flag("page_layout:near_top");
        }
        if line.bbox.y1 > 0.90 * page.height {
            fv.flag("page_layout:near_bottom");
        }
        if line.bbox.x0 < 0.08 * page.width {
            fv.flag("page_layout:left_margin");
        }
    }

    fn text_placement_features(&self, r: LineRef, line: &Line, fv: &mut FeatureVector) {
        let page = &self.doc.pages[r.page];
        let (min_x0, max_x1) = self.extents[r.page];
        if (page.width / 2.0 - line.bbox.x_center()).abs() < 0.05 * page.width {
            fv.flag("text_placement:centered");
        }
        if line.bbox.x0 <= min_x0 + 1.0 {
            fv.flag("text_placement:left_aligned");
        }
        if line.bbox.x1 >= max_x1 - 1.0 {
            fv.flag("text_placement:right_aligned");
        }
        let indent = (((line.bbox.x0 - min_x0) / 18.0).floor() as i64).clamp(0, 6);
        fv.flag(format!("text_placement:indent={indent}"));
    }

    fn visual_grouping_features(&self, r: LineRef, fv: &mut FeatureVector) {
        let block = &self.doc.pages[r.page].blocks[r.block];
        fv.flag(format!("visual_grouping:kind={}", block.kind.as_str()));
        if r.line == 0 {
            fv.flag("visual_grouping:first_of_block");
        }
        if r.line + 1 == block.lines.len() {
            fv.flag("visual_grouping:last_of_block");
        }
        let pos = self
            .order
            .position(r)
            .expect("resolved line is in reading order");
        if pos > 0 {
            if let Some(prev) = self.order.at(pos - 1) {
                if prev.page == r.page && prev.block == r.block {
                    fv.flag("visual_grouping:same_block_prev");
                }
            }
        }
    }

    fn style_features(&self, line: &Line, fv: &mut FeatureVector) {
        let n = line.tokens.len().max(1) as f64;
        let coverage = |count: usize| -> &'static str {
            if count == 0 {
                "none"
            } else if count as f64 >= n {
                "all"
            } else {
                "some"
            }
        };
        let bold = line.tokens.iter().filter(|t| t.bold).count();
        let italic = line.tokens.iter().filter(|t| t.italic).count();
        let underline = line.tokens.iter().filter(|t| t.underline).count();
        fv.flag(format!("style:bold={}", coverage(bold)));
        fv.flag(format!("style:italic={}", coverage(italic)));
        fv.flag(format!("style:underline={}", coverage(underline)));
        let mean_font =
            line.tokens.iter().map(|t| t.font_size).sum::<f64>() / line.tokens.len().max(1) as f64;
        let ratio = mean_font / self.body.body_font_size;
        let size = if ratio > 1.15 {
            "larger"
        } else if ratio < 0.9 {
            "smaller"
        } else {
            "body"
        };
        fv.flag(format!("style:size={size}"));
    }
}

/// Extracts features for one line, building a fresh per-document context.
///
/// When extracting features for many lines of the same document, build a
/// [`DocumentFeatures`] once instead.
pub fn line_features(
    doc: &Document,
    r: LineRef,
    config: FeatureConfig,
    body: BodyFontEstimate,
) -> Result<FeatureVector, InvalidRef> {
    DocumentFeatures::with_body(doc, config, body).line_features(r)
}

/// Features for the `token_index`-th token of a section's clean token stream.
///
/// Identity and window features come from the clean text; style flags (when
/// the style group is enabled) come from the source token the clean token was
/// carried over from.
pub fn token_features(
    doc: &Document,
    section: &Section,
    token_index: usize,
    config: FeatureConfig,
) -> Result<FeatureVector, TokenFeatureError> {
    let tokens: Vec<&str> = section.clean_text.split_whitespace().collect();
    if token_index >= tokens.len() {
        return Err(TokenFeatureError::OutOfRange {
            index: token_index,
            len: tokens.len(),
        });
    }
    let mut fv = FeatureVector::new();
    let text = tokens[token_index];
    fv.flag(format!("tok:lower={}", sanitize(&text.to_lowercase())));
    fv.flag(format!("tok:shape={}", token_shape(text)));
    if !text.is_empty() && text.chars().all(|c| c.is_ascii_digit()) {
        fv.flag("tok:isdigit");
    }
    if is_title_case(text) {
        fv.flag("tok:istitle");
    }
    let window = |offset: isize, name: &str, sentinel: &str| {
        let idx = token_index as isize + offset;
        if idx < 0 || idx as usize >= tokens.len() {
            format!("tok:{name}={sentinel}")
        } else {
            format!("tok:{name}={}", sanitize(&tokens[idx as usize].to_lowercase()))
        }
    };
    fv.flag(window(-1, "prev1", "<bos>"));
    fv.flag(window(-2, "prev2", "<bos>"));
    fv.flag(window(1, "next1", "<eos>"));
    fv.flag(window(2, "next2", "<eos>"));
    fv.flag(format!(
        "tok:pos={}",
        position_bucket(token_index, tokens.len())
    ));
    if config.style {
        let (line_ref, source_index) = section.token_provenance[token_index];
        let line = doc.resolve(line_ref)?;
        let token = line
            .tokens
            .get(source_index)
            .ok_or(InvalidRef(line_ref))?;
        if token.bold {
            fv.flag("style:bold");
        }
        if token.underline {
            fv.flag("style:underline");
        }
    }
    Ok(fv)
}

/// Feature vectors for every token of a section, in stream order.
pub fn section_token_features(
    doc: &Document,
    section: &Section,
    config: FeatureConfig,
) -> Result<Vec<FeatureVector>, TokenFeatureError> {
    let len = section.clean_text.split_whitespace().count();
    (0..len)
        .map(|i| token_features(doc, section, i, config))
        .collect()
}

/// Shape class for line-initial tokens: one of `Xx`, `XX`, `dd`, `d.d`,
/// `(a)`, `mixed`.
fn line_shape(text: &str) -> &'static str {
    shape_of(text, false)
}

/// Shape class for section tokens; identical to [`line_shape`] except a
/// single digit is `d` rather than `dd`.
fn token_shape(text: &str) -> &'static str {
    shape_of(text, true)
}

fn shape_of(text: &str, split_digit_lengths: bool) -> &'static str {
    if text.is_empty() {
        return "mixed";
    }
    let chars: Vec<char> = text.chars().collect();
    if chars.iter().all(|c| c.is_ascii_digit()) {
        return if split_digit_lengths && chars.len() == 1 {
            "d"
        } else {
            "dd"
        };
    }
    if chars[0].is_ascii_digit()
        && chars.iter().all(|c| c.is_ascii_digit() || *c == '.')
        && chars.contains(&'.')
    {
        return "d.d";
    }
    let trimmed = text.strip_suffix('.').unwrap_or(text);
    if trimmed.len() >= 3 && trimmed.starts_with('(') && trimmed.ends_with(')') {
        let inner = &trimmed[1..trimmed.len() - 1];
        if inner.len() <= 4 && inner.chars().all(|c| c.is_ascii_alphanumeric()) {
            return "(a)";
        }
    }
    if chars.iter().all(|c| c.is_alphabetic()) {
        if chars.iter().all(|c| c.is_uppercase()) {
            return "XX";
        }
        if chars[0].is_uppercase() && chars[1..].iter().all(|c| c.is_lowercase()) {
            return "Xx";
        }
    }
    "mixed"
}

fn length_bucket(n: usize) -> &'static str {
    match n {
        0 | 1 => "1",
        2..=5 => "2-5",
        6..=15 => "6-15",
        _ => "16+",
    }
}

/// Fraction of alphabetic tokens written fully in capitals, bucketed.
fn caps_bucket(line: &Line) -> &'static str {
    let mut alpha_tokens = 0usize;
    let mut caps_tokens = 0usize;
    for token in &line.tokens {
        let mut has_alpha = false;
        let mut all_upper = true;
        for c in token.text.chars().filter(|c| c.is_alphabetic()) {
            has_alpha = true;
            if !c.is_uppercase() {
                all_upper = false;
            }
        }
        if has_alpha {
            alpha_tokens += 1;
            if all_upper {
                caps_tokens += 1;
            }
        }
    }
    if alpha_tokens == 0 || caps_tokens == 0 {
        "none"
    } else if caps_tokens == alpha_tokens {
        "all"
    } else if caps_tokens * 2 >= alpha_tokens {
        "high"
    } else {
        "low"
    }
}

fn is_title_case(text: &str) -> bool {
    let mut alpha = text.chars().filter(|c| c.is_alphabetic());
    match alpha.next() {
        Some(first) if first.is_uppercase() => alpha.all(|c| c.is_lowercase()),
        _ => false,
    }
}

fn position_bucket(index: usize, len: usize) -> &'static str {
    if index == 0 {
        return "first";
    }
    let rel = index as f64 / len.max(1) as f64;
    if rel < 0.25 {
        "early"
    } else if rel < 0.75 {
        "middle"
    } else {
        "late"
    }
}

/// Replaces whitespace inside feature values so names stay single tokens.
pub(crate) fn sanitize(value: &str) -> String {
    if value.chars().any(|c| c.is_whitespace() || !c.is_ascii()) {
        value
            .chars()
            .map(|c| {
                if c.is_whitespace() {
                    '_'
                } else if c.is_ascii() {
                    c
                } else {
                    '?'
                }
            })
            .collect()
    } else {
        value.to_string()
    }
}
