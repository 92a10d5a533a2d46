//! Page-layout engine for the synthetic generator.
//!
//! The builder lays words onto fixed-size pages top to bottom, emitting
//! BIO labels and planned section spans as it goes, so a generated
//! document's reading order is its emission order by construction.
//! Page furniture (running headers, footers, e-signature stamps) is
//! stamped outside the content area; page breaks inside an open section
//! either keep the section open (mid-sentence) or close and reopen it
//! (previous line ended a sentence), mirroring how assembly re-joins
//! sections downstream.

use crate::doc::{BBox, Block, BlockKind, Document, Line, Page, Token};
use crate::splitter::{SectionTag, SectionType};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Width of one character as a fraction of the font size.
const CHAR_WIDTH: f64 = 0.5;
/// Vertical gap inserted between blocks.
const BLOCK_GAP: f64 = 6.0;

/// Placeholder footer token patched with the real page count at finish.
const TOTAL_PAGES_PLACEHOLDER: &str = "{TOTAL}";

#[derive(Debug, Clone, Copy)]
pub struct PageGeometry {
    pub width: f64,
    pub height: f64,
    pub margin: f64,
    pub header_y: f64,
    pub footer_y: f64,
}

impl PageGeometry {
    pub fn new(width: f64, height: f64) -> Self {
        PageGeometry { width, height, margin: 72.0, header_y: 36.0, footer_y: height - 44.0 }
    }

    pub fn content_top(&self) -> f64 {
        self.margin
    }

    pub fn content_bottom(&self) -> f64 {
        self.height - self.margin
    }

    pub fn text_width(&self) -> f64 {
        self.width - 2.0 * self.margin
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TextStyle {
    pub font_size: f64,
    pub bold: bool,
    pub italic: bool,
    pub underline: bool,
}

impl TextStyle {
    pub fn plain(font_size: f64) -> Self {
        TextStyle { font_size, bold: false, italic: false, underline: false }
    }

    pub fn bold(font_size: f64) -> Self {
        TextStyle { font_size, bold: true, italic: false, underline: false }
    }
}

/// A word queued for layout.
#[derive(Debug, Clone)]
pub struct Word {
    pub text: String,
    pub style: TextStyle,
}

/// Split text on whitespace into styled words.
pub fn words_of(text: &str, style: TextStyle) -> Vec<Word> {
    text.split_whitespace().map(|w| Word { text: w.to_string(), style }).collect()
}

#[derive(Debug, Clone, Copy)]
pub enum Align {
    Left(f64),
    Centered,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FooterVariant {
    /// "4"
    BareNumber,
    /// "Page 4 of 12"
    PageXofY,
    /// "- 4 -"
    Dashed,
    /// "<Agreement Title> - 4"
    TitleNumber,
    /// "Confidential 4"
    ConfidentialNumber,
}

#[derive(Debug, Clone, Copy)]
pub struct FooterStyle {
    pub variant: FooterVariant,
    pub font_size: f64,
    pub centered: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeaderVariant {
    /// Agreement title in small type.
    RunningTitle,
    /// "CONFIDENTIAL"
    Confidential,
    /// E-signature envelope stamp in the top-left margin.
    EnvelopeStamp,
    /// Title line plus a "CONFIDENTIAL" second line.
    TitleConfidential,
}

#[derive(Debug, Clone, Copy)]
pub struct HeaderStyle {
    pub variant: HeaderVariant,
    pub font_size: f64,
}

impl HeaderStyle {
    /// Stamps appear on the first page too; running titles start on page 2.
    fn on_first_page(&self) -> bool {
        self.variant == HeaderVariant::EnvelopeStamp
    }
}

struct OpenSection {
    ty: SectionType,
    lines_emitted: usize,
    last_line_text: String,
}

pub struct FlowOpts {
    pub x0: f64,
    pub line_step: f64,
    /// Force a page break (with a footer) before this word index.
    pub break_before: Option<usize>,
    /// Inclusive word-index range whose global token range is reported back.
    pub marked: Option<(usize, usize)>,
    /// Emit lines outside any section (title preamble, recitals,
    /// signature text) instead of into the open section.
    pub outside: bool,
}

impl FlowOpts {
    pub fn section(x0: f64, line_step: f64) -> Self {
        FlowOpts { x0, line_step, break_before: None, marked: None, outside: false }
    }

    pub fn untagged(x0: f64, line_step: f64) -> Self {
        FlowOpts { x0, line_step, break_before: None, marked: None, outside: true }
    }
}

pub struct DocBuilder<'a> {
    rng: &'a mut ChaCha8Rng,
    geom: PageGeometry,
    style_noise: f64,

    pages: Vec<Page>,
    cur_blocks: Vec<Block>,
    cur_lines: Vec<Line>,
    cur_kind: BlockKind,
    cursor_y: f64,
    content_lines_on_page: usize,

    labels: Vec<SectionTag>,
    global_token: usize,
    sections: Vec<(SectionType, usize, usize)>,
    open_section: Option<OpenSection>,

    header: Option<HeaderStyle>,
    footer: Option<FooterStyle>,
    title_words: Vec<String>,
    envelope_id: String,
    /// Footer lines containing the total-pages placeholder, as
    /// (page index, block index, line index) to patch at finish.
    pending_page_totals: Vec<(usize, usize, usize)>,
}

impl<'a> DocBuilder<'a> {
    pub fn new(
        rng: &'a mut ChaCha8Rng,
        geom: PageGeometry,
        style_noise: f64,
        header: Option<HeaderStyle>,
        footer: Option<FooterStyle>,
        title: &str,
        envelope_id: String,
    ) -> Self {
        DocBuilder {
            rng,
            geom,
            style_noise,
            pages: Vec::new(),
            cur_blocks: Vec::new(),
            cur_lines: Vec::new(),
            cur_kind: BlockKind::Paragraph,
            cursor_y: geom.content_top(),
            content_lines_on_page: 0,
            labels: Vec::new(),
            global_token: 0,
            sections: Vec::new(),
            open_section: None,
            header,
            footer,
            title_words: title.split_whitespace().map(str::to_string).collect(),
            envelope_id,
            pending_page_totals: Vec::new(),
        }
    }

    pub fn geometry(&self) -> PageGeometry {
        self.geom
    }

    /// 1-based number of the page currently being laid out.
    fn current_page_number(&self) -> usize {
        self.pages.len() + 1
    }

    pub fn start_page(&mut self) {
        self.cursor_y = self.geom.content_top();
        self.content_lines_on_page = 0;
        if let Some(style) = self.header {
            if self.current_page_number() > 1 || style.on_first_page() {
                self.emit_header(style);
            }
        }
    }

    // ----- blocks -----

    pub fn begin_block(&mut self, kind: BlockKind) {
        self.flush_block();
        if self.cursor_y > self.geom.content_top() {
            self.cursor_y += BLOCK_GAP;
        }
        self.cur_kind = kind;
    }

    fn flush_block(&mut self) {
        if self.cur_lines.is_empty() {
            return;
        }
        let lines = std::mem::take(&mut self.cur_lines);
        let bbox = lines.iter().skip(1).fold(lines[0].bbox, |acc, l| acc.union(&l.bbox));
        self.pages_push_block(Block { kind: self.cur_kind, bbox, lines });
    }

    fn pages_push_block(&mut self, block: Block) {
        self.cur_blocks.push(block);
    }

    // ----- sections -----

    pub fn open_section(&mut self, ty: SectionType) {
        assert!(self.open_section.is_none(), "section already open");
        assert!(ty.is_body(), "page furniture is stamped by header/footer styles");
        self.open_section = Some(OpenSection { ty, lines_emitted: 0, last_line_text: String::new() });
    }

    pub fn close_section(&mut self) {
        let open = self.open_section.take().expect("no open section to close");
        assert!(open.lines_emitted > 0, "closing a section with no lines");
        // The section's lines are the most recent `lines_emitted` lines of
        // its type; page furniture stamped by mid-section breaks interleaves
        // but is never the same type as a body section.
        let mut remaining = open.lines_emitted;
        let mut first = usize::MAX;
        let mut last = usize::MAX;
        for (i, tag) in self.labels.iter().enumerate().rev() {
            if tag.section_type() == Some(open.ty) {
                if last == usize::MAX {
                    last = i;
                }
                first = i;
                remaining -= 1;
                if remaining == 0 {
                    break;
                }
            }
        }
        debug_assert_eq!(remaining, 0, "label tail shorter than open section");
        debug_assert!(self.labels[first].is_begin());
        self.sections.push((open.ty, first, last));
    }

    // ----- line emission -----

    /// OCR style detection is imperfect: bold and underline flags flip
    /// independently with probability `style_noise`; italics are left as
    /// authored.
    fn noisy_flags(&mut self, style: TextStyle) -> (bool, bool, bool) {
        let noise = self.style_noise;
        let mut flip = |v: bool| {
            if noise > 0.0 && self.rng.gen_bool(noise) {
                !v
            } else {
                v
            }
        };
        (flip(style.bold), style.italic, flip(style.underline))
    }

    fn layout_line(&mut self, words: &[Word], align: Align, y: f64) -> Line {
        let space = |w: &Word| w.style.font_size * CHAR_WIDTH;
        let width: f64 = words
            .iter()
            .map(|w| w.text.chars().count() as f64 * w.style.font_size * CHAR_WIDTH)
            .sum::<f64>()
            + words.iter().skip(1).map(space).sum::<f64>();
        let mut x = match align {
            Align::Left(x0) => x0,
            Align::Centered => (self.geom.width - width) / 2.0,
            Align::Right => self.geom.width - self.geom.margin - width,
        };
        let mut tokens = Vec::with_capacity(words.len());
        for w in words {
            let tw = w.text.chars().count() as f64 * w.style.font_size * CHAR_WIDTH;
            let (bold, italic, underline) = self.noisy_flags(w.style);
            tokens.push(Token {
                text: w.text.clone(),
                bbox: BBox::new(x, y, x + tw, y + w.style.font_size),
                font_size: w.style.font_size,
                bold,
                italic,
                underline,
            });
            x += tw + space(w);
        }
        let bbox = tokens.iter().skip(1).fold(tokens[0].bbox, |acc, t| acc.union(&t.bbox));
        Line { bbox, tokens }
    }

    /// Emit one line at the cursor inside the content area.
    /// Returns the global token range of the line.
    fn emit_content_line(
        &mut self,
        words: &[Word],
        align: Align,
        step: f64,
        tag: SectionTag,
        advance: bool,
    ) -> (usize, usize) {
        debug_assert!(!words.is_empty());
        if self.cursor_y + step > self.geom.content_bottom() {
            self.break_page(false);
        }
        let line = self.layout_line(words, align, self.cursor_y);
        let first = self.global_token;
        self.global_token += line.tokens.len();
        self.cur_lines.push(line);
        self.labels.push(tag);
        self.content_lines_on_page += 1;
        if advance {
            self.cursor_y += step;
        }
        (first, self.global_token - 1)
    }

    /// Emit a line belonging to the open section; the tag is `B-*` for
    /// the section's first line and `I-*` afterwards.
    pub fn emit_section_line(&mut self, words: &[Word], align: Align, step: f64) -> (usize, usize) {
        self.emit_section_line_at(words, align, step, true)
    }

    /// As [`emit_section_line`], optionally leaving the cursor in place so
    /// the next line shares the same top edge (side-by-side table cells).
    pub fn emit_section_line_at(
        &mut self,
        words: &[Word],
        align: Align,
        step: f64,
        advance: bool,
    ) -> (usize, usize) {
        // Break *before* choosing the tag: a page break can close the open
        // section (sentence-final pre-break line) and reopen it, in which
        // case this line starts the continuation and must carry `B-*`.
        if self.cursor_y + step > self.geom.content_bottom() {
            self.break_page(false);
        }
        let (ty, first_line) = {
            let open = self.open_section.as_ref().expect("no open section");
            (open.ty, open.lines_emitted == 0)
        };
        let tag = if first_line { SectionTag::begin(ty) } else { SectionTag::inside(ty) };
        let range = self.emit_content_line(words, align, step, tag, advance);
        let open = self.open_section.as_mut().unwrap();
        open.lines_emitted += 1;
        open.last_line_text =
            words.iter().map(|w| w.text.as_str()).collect::<Vec<_>>().join(" ");
        range
    }

    /// Emit a line that belongs to no section (title, recital, signature).
    pub fn emit_outside_line(&mut self, words: &[Word], align: Align, step: f64) {
        assert!(self.open_section.is_none(), "outside lines cannot interrupt a section");
        self.emit_content_line(words, align, step, SectionTag::Outside, true);
    }

    /// Flow body words into wrapped lines for the open section.
    pub fn flow_words(&mut self, words: &[Word], opts: &FlowOpts) -> Option<(usize, usize)> {
        let max_x = self.geom.width - self.geom.margin;
        let mut marked_range: Option<(usize, usize)> = None;
        let mut buf: Vec<(usize, Word)> = Vec::new();
        let mut x = opts.x0;

        let mut emit_buf = |b: &mut Self, buf: &mut Vec<(usize, Word)>| {
            if buf.is_empty() {
                return;
            }
            let line_words: Vec<Word> = buf.iter().map(|(_, w)| w.clone()).collect();
            let (tok_first, _) = if opts.outside {
                assert!(b.open_section.is_none(), "outside flow cannot interrupt a section");
                b.emit_content_line(
                    &line_words,
                    Align::Left(opts.x0),
                    opts.line_step,
                    SectionTag::Outside,
                    true,
                )
            } else {
                b.emit_section_line(&line_words, Align::Left(opts.x0), opts.line_step)
            };
            for (offset, (wi, _)) in buf.iter().enumerate() {
                if let Some((m0, m1)) = opts.marked {
                    let tok = tok_first + offset;
                    if *wi == m0 {
                        marked_range = Some((tok, tok));
                    }
                    if *wi >= m0 && *wi <= m1 {
                        if let Some(r) = marked_range.as_mut() {
                            r.1 = tok;
                        }
                    }
                }
            }
            buf.clear();
        };

        for (wi, word) in words.iter().enumerate() {
            if opts.break_before == Some(wi) {
                emit_buf(self, &mut buf);
                self.break_page(true);
                x = opts.x0;
            }
            let w = word.text.chars().count() as f64 * word.style.font_size * CHAR_WIDTH;
            let space = word.style.font_size * CHAR_WIDTH;
            let advance = if buf.is_empty() { w } else { w + space };
            if !buf.is_empty() && x + advance > max_x {
                emit_buf(self, &mut buf);
                x = opts.x0;
            }
            x += if buf.is_empty() { w } else { advance };
            buf.push((wi, word.clone()));
        }
        emit_buf(self, &mut buf);
        marked_range
    }

    // ----- page furniture and page breaks -----

    fn emit_absolute_line(&mut self, words: &[Word], align: Align, y: f64, tag: SectionTag) {
        let line = self.layout_line(words, align, y);
        self.global_token += line.tokens.len();
        self.cur_lines.push(line);
        self.labels.push(tag);
    }

    fn emit_header(&mut self, style: HeaderStyle) {
        self.flush_block();
        let prev_kind = self.cur_kind;
        self.cur_kind = BlockKind::Other;
        let first = self.labels.len();
        let plain = TextStyle::plain(style.font_size);
        match style.variant {
            HeaderVariant::RunningTitle => {
                let text = self.title_words.join(" ");
                let w = words_of(&text, plain);
                self.emit_absolute_line(&w, Align::Left(self.geom.margin), self.geom.header_y, SectionTag::BHeader);
            }
            HeaderVariant::Confidential => {
                let w = words_of("CONFIDENTIAL", plain);
                self.emit_absolute_line(&w, Align::Centered, self.geom.header_y, SectionTag::BHeader);
            }
            HeaderVariant::EnvelopeStamp => {
                let text = format!("DocuSign Envelope ID: {}", self.envelope_id);
                let w = words_of(&text, plain);
                self.emit_absolute_line(&w, Align::Left(30.0), self.geom.header_y, SectionTag::BHeader);
            }
            HeaderVariant::TitleConfidential => {
                let text = self.title_words.join(" ");
                let w = words_of(&text, plain);
                self.emit_absolute_line(&w, Align::Centered, self.geom.header_y, SectionTag::BHeader);
                let w2 = words_of("CONFIDENTIAL", plain);
                self.emit_absolute_line(&w2, Align::Centered, self.geom.header_y + style.font_size + 2.0, SectionTag::IHeader);
            }
        }
        self.sections.push((SectionType::Header, first, self.labels.len() - 1));
        self.flush_block();
        self.cur_kind = prev_kind;
    }

    fn emit_footer(&mut self, style: FooterStyle) {
        self.flush_block();
        let prev_kind = self.cur_kind;
        self.cur_kind = BlockKind::Other;
        let first = self.labels.len();
        let plain = TextStyle::plain(style.font_size);
        let n = self.current_page_number().to_string();
        let align = if style.centered { Align::Centered } else { Align::Right };
        let mut patch_total = false;
        let text = match style.variant {
            FooterVariant::BareNumber => n,
            FooterVariant::PageXofY => {
                patch_total = true;
                format!("Page {n} of {TOTAL_PAGES_PLACEHOLDER}")
            }
            FooterVariant::Dashed => format!("- {n} -"),
            FooterVariant::TitleNumber => {
                let mut title: Vec<String> = self
                    .title_words
                    .iter()
                    .map(|w| {
                        let lower = w.to_lowercase();
                        let mut c = lower.chars();
                        match c.next() {
                            Some(f) => f.to_uppercase().collect::<String>() + c.as_str(),
                            None => lower,
                        }
                    })
                    .collect();
                title.push("-".to_string());
                title.push(n);
                title.join(" ")
            }
            FooterVariant::ConfidentialNumber => format!("Confidential {n}"),
        };
        let w = words_of(&text, plain);
        self.emit_absolute_line(&w, align, self.geom.footer_y, SectionTag::BFooter);
        if patch_total {
            self.pending_page_totals.push((
                self.pages.len(),
                self.cur_blocks.len(),
                self.cur_lines.len() - 1,
            ));
        }
        self.sections.push((SectionType::Footer, first, self.labels.len() - 1));
        self.flush_block();
        self.cur_kind = prev_kind;
    }

    fn close_page(&mut self, force_footer: bool) {
        self.flush_block();
        if let Some(style) = self.footer {
            self.emit_footer(style);
        } else if force_footer {
            self.emit_footer(FooterStyle {
                variant: FooterVariant::BareNumber,
                font_size: 9.0,
                centered: true,
            });
        }
        let blocks = std::mem::take(&mut self.cur_blocks);
        self.pages.push(Page { width: self.geom.width, height: self.geom.height, blocks });
    }

    /// Break to a fresh page, keeping block kind and section continuity.
    /// If the open section already has lines and the last one ended a
    /// sentence, the section is closed and a new one of the same type
    /// opened, so the continuation starts with a fresh `B-*` tag.
    fn break_page(&mut self, force_footer: bool) {
        let kind = self.cur_kind;
        self.close_page(force_footer);
        self.start_page();
        self.cur_kind = kind;
        if let Some(open) = self.open_section.as_mut() {
            if open.lines_emitted > 0 && ends_sentence(&open.last_line_text) {
                let ty = open.ty;
                self.close_section();
                self.open_section(ty);
            }
        }
    }

    /// Break the page now unless at least `steps` more lines of height
    /// `step` fit below the cursor (keep-with-next for headings).
    pub fn ensure_room(&mut self, steps: f64, step: f64) {
        if self.cursor_y + steps * step > self.geom.content_bottom() {
            self.break_page(false);
        }
    }

    // ----- finish -----

    pub fn finish(mut self, doc_id: &str) -> BuiltDoc {
        assert!(self.open_section.is_none(), "unclosed section at finish");
        if self.content_lines_on_page > 0 || !self.cur_lines.is_empty() || !self.cur_blocks.is_empty()
        {
            self.close_page(false);
        }
        let total = self.pages.len().to_string();
        let footer = self.footer;
        for (pi, bi, li) in self.pending_page_totals.drain(..).collect::<Vec<_>>() {
            let style = footer.expect("page totals only pending with a footer style");
            let line = &mut self.pages[pi].blocks[bi].lines[li];
            let words: Vec<Word> = line
                .tokens
                .iter()
                .map(|t| Word {
                    text: if t.text == TOTAL_PAGES_PLACEHOLDER {
                        total.clone()
                    } else {
                        t.text.clone()
                    },
                    style: TextStyle {
                        font_size: t.font_size,
                        bold: t.bold,
                        italic: t.italic,
                        underline: t.underline,
                    },
                })
                .collect();
            let align = if style.centered { Align::Centered } else { Align::Right };
            // Re-lay the footer line with the real page count; style noise
            // was already applied, so carry flags through verbatim.
            let y = line.bbox.y0;
            let relaid = {
                let width: f64 = words
                    .iter()
                    .map(|w| w.text.chars().count() as f64 * w.style.font_size * CHAR_WIDTH)
                    .sum::<f64>()
                    + words
                        .iter()
                        .skip(1)
                        .map(|w| w.style.font_size * CHAR_WIDTH)
                        .sum::<f64>();
                let mut x = match align {
                    Align::Left(x0) => x0,
                    Align::Centered => (self.geom.width - width) / 2.0,
                    Align::Right => self.geom.width - self.geom.margin - width,
                };
                let mut tokens = Vec::with_capacity(words.len());
                for w in &words {
                    let tw = w.text.chars().count() as f64 * w.style.font_size * CHAR_WIDTH;
                    tokens.push(Token {
                        text: w.text.clone(),
                        bbox: BBox::new(x, y, x + tw, y + w.style.font_size),
                        font_size: w.style.font_size,
                        bold: w.style.bold,
                        italic: w.style.italic,
                        underline: w.style.underline,
                    });
                    x += tw + w.style.font_size * CHAR_WIDTH;
                }
                let bbox =
                    tokens.iter().skip(1).fold(tokens[0].bbox, |acc, t| acc.union(&t.bbox));
                Line { bbox, tokens }
            };
            let block = &mut self.pages[pi].blocks[bi];
            block.lines[li] = relaid;
            block.bbox = block
                .lines
                .iter()
                .skip(1)
                .fold(block.lines[0].bbox, |acc, l| acc.union(&l.bbox));
        }
        BuiltDoc {
            document: Document {
                doc_id: doc_id.to_string(),
                source_name: format!("{doc_id}.json"),
                pages: self.pages,
            },
            line_labels: self.labels,
            sections: self.sections,
        }
    }
}

/// Raw output of the builder before attribute bookkeeping.
pub struct BuiltDoc {
    pub document: Document,
    pub line_labels: Vec<SectionTag>,
    pub sections: Vec<(SectionType, usize, usize)>,
}

/// Same sentence-end convention the assembler uses for page-break repair.
pub fn ends_sentence(text: &str) -> bool {
    matches!(text.trim_end().chars().last(), Some('.') | Some(';'))
}
