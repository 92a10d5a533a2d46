//! In-memory model of an OCR'd document and its JSON interchange format.
//!
//! A [`Document`] is a list of pages; each page owns visually grouped
//! [`Block`]s, blocks own [`Line`]s, lines own [`Token`]s. Geometry uses
//! top-left-origin page coordinates in points. Reading order is defined
//! per page as top-to-bottom by line top edge, ties broken left-to-right.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

/// Slack (in points) allowed when checking box containment.
pub const GEOMETRY_TOLERANCE: f64 = 1.0;

/// Axis-aligned bounding box in page coordinates (top-left origin, points).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl BBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        BBox { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    /// Horizontal center of the box.
    pub fn x_center(&self) -> f64 {
        (self.x0 + self.x1) / 2.0
    }

    /// Vertical center of the box.
    pub fn y_center(&self) -> f64 {
        (self.y0 + self.y1) / 2.0
    }

    fn is_finite(&self) -> bool {
        self.x0.is_finite() && self.y0.is_finite() && self.x1.is_finite() && self.y1.is_finite()
    }

    /// True when `inner` lies inside `self` expanded by `tol` on every side.
    pub fn contains_with_tolerance(&self, inner: &BBox, tol: f64) -> bool {
        inner.x0 >= self.x0 - tol
            && inner.y0 >= self.y0 - tol
            && inner.x1 <= self.x1 + tol
            && inner.y1 <= self.y1 + tol
    }

    /// Smallest box covering both operands.
    pub fn union(&self, other: &BBox) -> BBox {
        BBox {
            x0: self.x0.min(other.x0),
            y0: self.y0.min(other.y0),
            x1: self.x1.max(other.x1),
            y1: self.y1.max(other.y1),
        }
    }
}

impl From<[f64; 4]> for BBox {
    fn from(v: [f64; 4]) -> Self {
        BBox { x0: v[0], y0: v[1], x1: v[2], y1: v[3] }
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x0, b.y0, b.x1, b.y1]
    }
}

/// One OCR token: whitespace-free text plus geometry and style flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub bbox: BBox,
    pub font_size: f64,
    pub bold: bool,
    pub italic: bool,
    pub underline: bool,
}

/// One visual line of tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub bbox: BBox,
    pub tokens: Vec<Token>,
}

impl Line {
    /// Line text: token texts joined with single spaces.
    pub fn text(&self) -> String {
        let parts: Vec<&str> = self.tokens.iter().map(|t| t.text.as_str()).collect();
        parts.join(" ")
    }

    /// Lowercased text of token `i`, if present.
    pub fn token_lower(&self, i: usize) -> Option<String> {
        self.tokens.get(i).map(|t| t.text.to_lowercase())
    }
}

/// Visual grouping kind assigned by the OCR layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Paragraph,
    List,
    Table,
    Other,
}

impl BlockKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BlockKind::Paragraph => "paragraph",
            BlockKind::List => "list",
            BlockKind::Table => "table",
            BlockKind::Other => "other",
        }
    }
}

/// A visually grouped run of lines (paragraph, list, table, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub kind: BlockKind,
    pub bbox: BBox,
    pub lines: Vec<Line>,
}

/// One page with fixed dimensions in points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Page {
    pub width: f64,
    pub height: f64,
    pub blocks: Vec<Block>,
}

impl Page {
    pub fn line_count(&self) -> usize {
        self.blocks.iter().map(|b| b.lines.len()).sum()
    }
}

/// A full OCR'd document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    /// Name of the file or scan the OCR output came from.
    #[serde(default)]
    pub source_name: String,
    pub pages: Vec<Page>,
}

/// Stable address of a line: (page, block, line) indices.
///
/// The derived lexicographic ordering matches reading order for documents
/// whose blocks are stored top-to-bottom, which the corpus generator
/// guarantees; [`ReadingOrder`] is authoritative for arbitrary input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LineRef {
    pub page: usize,
    pub block: usize,
    pub line: usize,
}

impl LineRef {
    pub fn new(page: usize, block: usize, line: usize) -> Self {
        LineRef { page, block, line }
    }
}

impl fmt::Display for LineRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}b{}l{}", self.page, self.block, self.line)
    }
}

impl Document {
    /// Resolve a line reference, if it points inside the document.
    pub fn line(&self, r: LineRef) -> Option<&Line> {
        self.pages.get(r.page)?.blocks.get(r.block)?.lines.get(r.line)
    }

    /// Resolve a line reference or report it as invalid.
    pub fn resolve(&self, r: LineRef) -> Result<&Line, InvalidRef> {
        self.line(r).ok_or(InvalidRef(r))
    }

    /// Total token count over all pages.
    pub fn token_count(&self) -> usize {
        self.pages
            .iter()
            .flat_map(|p| &p.blocks)
            .flat_map(|b| &b.lines)
            .map(|l| l.tokens.len())
            .sum()
    }
}

/// A line reference outside the document it was resolved against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("line reference {0} does not exist in this document")]
pub struct InvalidRef(pub LineRef);

/// Errors produced when parsing or validating a document.
#[derive(Debug, Error)]
pub enum ParseError {
    /// Malformed JSON or a field with the wrong shape/content.
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    /// Non-finite, degenerate, or out-of-bounds geometry.
    #[error("geometry error at {path}: {message}")]
    Geometry { path: String, message: String },
    /// A required collection (pages, lines, tokens) is empty.
    #[error("empty {path}: {message}")]
    Empty { path: String, message: String },
}

impl ParseError {
    fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        ParseError::Schema { path: path.into(), message: message.into() }
    }

    fn geometry(path: impl Into<String>, message: impl Into<String>) -> Self {
        ParseError::Geometry { path: path.into(), message: message.into() }
    }

    fn empty(path: impl Into<String>, message: impl Into<String>) -> Self {
        ParseError::Empty { path: path.into(), message: message.into() }
    }
}

/// Parse a document from JSON bytes and validate every invariant.
pub fn parse_document(bytes: &[u8]) -> Result<Document, ParseError> {
    let doc: Document = serde_json::from_slice(bytes)
        .map_err(|e| ParseError::schema("$", e.to_string()))?;
    validate_document(&doc)?;
    Ok(doc)
}

/// Serialize a document to pretty-printed JSON (stable field order).
pub fn serialize_document(doc: &Document) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("document serialization cannot fail");
    s.push('\n');
    s
}

fn validate_bbox(b: &BBox, path: &str) -> Result<(), ParseError> {
    if !b.is_finite() {
        return Err(ParseError::geometry(path, "bbox has non-finite coordinates"));
    }
    if b.x0 >= b.x1 || b.y0 >= b.y1 {
        return Err(ParseError::geometry(
            path,
            format!("degenerate bbox [{}, {}, {}, {}]", b.x0, b.y0, b.x1, b.y1),
        ));
    }
    Ok(())
}

/// Check every structural and geometric invariant of a document.
pub fn validate_document(doc: &Document) -> Result<(), ParseError> {
    if doc.doc_id.is_empty() {
        return Err(ParseError::schema("doc_id", "doc_id must be non-empty"));
    }
    if doc.pages.is_empty() {
        return Err(ParseError::empty("pages", "document has no pages"));
    }
    for (pi, page) in doc.pages.iter().enumerate() {
        let ppath = format!("pages[{pi}]");
        if !(page.width.is_finite() && page.height.is_finite())
            || page.width <= 0.0
            || page.height <= 0.0
        {
            return Err(ParseError::geometry(&ppath, "page dimensions must be positive and finite"));
        }
        let page_box = BBox::new(0.0, 0.0, page.width, page.height);
        for (bi, block) in page.blocks.iter().enumerate() {
            let bpath = format!("{ppath}.blocks[{bi}]");
            validate_bbox(&block.bbox, &bpath)?;
            if block.lines.is_empty() {
                return Err(ParseError::empty(&bpath, "block has no lines"));
            }
            for (li, line) in block.lines.iter().enumerate() {
                let lpath = format!("{bpath}.lines[{li}]");
                validate_bbox(&line.bbox, &lpath)?;
                if !page_box.contains_with_tolerance(&line.bbox, GEOMETRY_TOLERANCE) {
                    return Err(ParseError::geometry(&lpath, "line bbox outside page bounds"));
                }
                if line.tokens.is_empty() {
                    return Err(ParseError::empty(&lpath, "line has no tokens"));
                }
                for (ti, token) in line.tokens.iter().enumerate() {
                    let tpath = format!("{lpath}.tokens[{ti}]");
                    if token.text.is_empty() {
                        return Err(ParseError::schema(&tpath, "token text is empty"));
                    }
                    if token.text.chars().any(|c| c.is_whitespace()) {
                        return Err(ParseError::schema(&tpath, "token text contains whitespace"));
                    }
                    validate_bbox(&token.bbox, &tpath)?;
                    if !line.bbox.contains_with_tolerance(&token.bbox, GEOMETRY_TOLERANCE) {
                        return Err(ParseError::geometry(
                            &tpath,
                            "token bbox outside line bbox (1pt tolerance)",
                        ));
                    }
                    if !token.font_size.is_finite() || token.font_size <= 0.0 {
                        return Err(ParseError::schema(
                            &tpath,
                            "font_size must be positive and finite",
                        ));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Precomputed reading order over a document's lines.
///
/// Page order first, then top-to-bottom by line top edge, ties broken
/// left-to-right by line left edge; remaining ties keep input order.
#[derive(Debug, Clone)]
pub struct ReadingOrder {
    refs: Vec<LineRef>,
    index: HashMap<LineRef, usize>,
}

impl ReadingOrder {
    pub fn of(doc: &Document) -> Self {
        let mut refs = Vec::new();
        for (pi, page) in doc.pages.iter().enumerate() {
            let mut page_refs: Vec<(f64, f64, LineRef)> = Vec::new();
            for (bi, block) in page.blocks.iter().enumerate() {
                for (li, line) in block.lines.iter().enumerate() {
                    page_refs.push((line.bbox.y0, line.bbox.x0, LineRef::new(pi, bi, li)));
                }
            }
            page_refs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
            refs.extend(page_refs.into_iter().map(|(_, _, r)| r));
        }
        let index = refs.iter().enumerate().map(|(i, r)| (*r, i)).collect();
        ReadingOrder { refs, index }
    }

    pub fn refs(&self) -> &[LineRef] {
        &self.refs
    }

    pub fn len(&self) -> usize {
        self.refs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.refs.is_empty()
    }

    /// Global index of a line in reading order.
    pub fn position(&self, r: LineRef) -> Option<usize> {
        self.index.get(&r).copied()
    }

    /// Line reference at global index `i`.
    pub fn at(&self, i: usize) -> Option<LineRef> {
        self.refs.get(i).copied()
    }
}

/// All lines of a document in reading order.
pub fn lines_in_reading_order(doc: &Document) -> Vec<(LineRef, &Line)> {
    ReadingOrder::of(doc)
        .refs()
        .iter()
        .map(|&r| (r, doc.line(r).expect("reading order refs are valid")))
        .collect()
}

/// All tokens in reading order as `(line ref, token index within line)`.
pub fn tokens_in_reading_order(doc: &Document) -> Vec<(LineRef, usize)> {
    let mut out = Vec::new();
    for (r, line) in lines_in_reading_order(doc) {
        for ti in 0..line.tokens.len() {
            out.push((r, ti));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn token(text: &str, x0: f64, y0: f64) -> Token {
        let w = text.len() as f64 * 5.5;
        Token {
            text: text.to_string(),
            bbox: BBox::new(x0, y0, x0 + w, y0 + 11.0),
            font_size: 11.0,
            bold: false,
            italic: false,
            underline: false,
        }
    }

    fn line(words: &[&str], x0: f64, y0: f64) -> Line {
        let mut x = x0;
        let mut tokens = Vec::new();
        for w in words {
            let t = token(w, x, y0);
            x = t.bbox.x1 + 5.5;
            tokens.push(t);
        }
        let bbox = tokens
            .iter()
            .skip(1)
            .fold(tokens[0].bbox, |acc, t| acc.union(&t.bbox));
        Line { bbox, tokens }
    }

    fn one_page_doc(lines: Vec<Line>) -> Document {
        let bbox = lines
            .iter()
            .skip(1)
            .fold(lines[0].bbox, |acc, l| acc.union(&l.bbox));
        Document {
            doc_id: "doc_test".to_string(),
            source_name: "doc_test.json".to_string(),
            pages: vec![Page {
                width: 612.0,
                height: 792.0,
                blocks: vec![Block { kind: BlockKind::Paragraph, bbox, lines }],
            }],
        }
    }

    #[test]
    fn roundtrip_preserves_document() {
        let doc = one_page_doc(vec![
            line(&["This", "Agreement"], 72.0, 100.0),
            line(&["shall", "commence"], 72.0, 120.0),
        ]);
        let json = serialize_document(&doc);
        let parsed = parse_document(json.as_bytes()).expect("round-trip parse");
        assert_eq!(doc, parsed);
    }

    #[test]
    fn rejects_empty_pages() {
        let json = r#"{"doc_id": "d", "pages": []}"#;
        match parse_document(json.as_bytes()) {
            Err(ParseError::Empty { path, .. }) => assert_eq!(path, "pages"),
            other => panic!("expected Empty error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_token_with_whitespace() {
        let mut doc = one_page_doc(vec![line(&["ok"], 72.0, 100.0)]);
        doc.pages[0].blocks[0].lines[0].tokens[0].text = "two words".to_string();
        let json = serialize_document(&doc);
        match parse_document(json.as_bytes()) {
            Err(ParseError::Schema { path, .. }) => {
                assert_eq!(path, "pages[0].blocks[0].lines[0].tokens[0]");
            }
            other => panic!("expected Schema error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_degenerate_bbox() {
        let mut doc = one_page_doc(vec![line(&["ok"], 72.0, 100.0)]);
        doc.pages[0].blocks[0].lines[0].tokens[0].bbox = BBox::new(10.0, 10.0, 10.0, 20.0);
        let json = serialize_document(&doc);
        assert!(matches!(
            parse_document(json.as_bytes()),
            Err(ParseError::Geometry { .. })
        ));
    }

    #[test]
    fn rejects_token_outside_line_box() {
        let mut doc = one_page_doc(vec![line(&["ok", "fine"], 72.0, 100.0)]);
        doc.pages[0].blocks[0].lines[0].tokens[1].bbox.y1 += 5.0;
        let json = serialize_document(&doc);
        assert!(matches!(
            parse_document(json.as_bytes()),
            Err(ParseError::Geometry { .. })
        ));
    }

    #[test]
    fn same_top_edge_orders_left_to_right() {
        let left = line(&["left"], 72.0, 100.0);
        let right = line(&["right"], 300.0, 100.0);
        let doc = one_page_doc(vec![right.clone(), left.clone()]);
        let ordered = lines_in_reading_order(&doc);
        assert_eq!(ordered[0].1.text(), "left");
        assert_eq!(ordered[1].1.text(), "right");
    }

    #[test]
    fn reading_order_spans_pages_in_page_order() {
        let mut doc = one_page_doc(vec![line(&["second", "page?"], 72.0, 50.0)]);
        let p2 = doc.pages[0].clone();
        doc.pages.insert(
            0,
            Page {
                width: 612.0,
                height: 792.0,
                blocks: vec![Block {
                    kind: BlockKind::Paragraph,
                    bbox: BBox::new(72.0, 700.0, 200.0, 711.0),
                    lines: vec![line(&["first", "page"], 72.0, 700.0)],
                }],
            },
        );
        doc.pages[1] = p2;
        let ordered = lines_in_reading_order(&doc);
        assert_eq!(ordered[0].1.text(), "first page");
        assert_eq!(ordered[1].1.text(), "second page?");
    }

    #[test]
    fn resolve_reports_invalid_refs() {
        let doc = one_page_doc(vec![line(&["ok"], 72.0, 100.0)]);
        assert!(doc.resolve(LineRef::new(0, 0, 0)).is_ok());
        let err = doc.resolve(LineRef::new(0, 0, 7)).unwrap_err();
        assert_eq!(err.0, LineRef::new(0, 0, 7));
    }
}
