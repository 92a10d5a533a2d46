//! Document composition: turns a [`GenConfig`] and a document index into
//! one laid-out contract with full ground truth.
//!
//! Composition happens in two phases. `draw_plan` samples every textual
//! decision up front — party names, clause order, concrete sentences,
//! numbering — so the layout pass that follows only spends randomness on
//! OCR style noise. The layout pass walks the plan through [`DocBuilder`],
//! which records line labels and section spans as a side effect of
//! emission.

use rand::seq::index;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::builder::{
    words_of, Align, DocBuilder, FlowOpts, FooterStyle, FooterVariant, HeaderStyle, HeaderVariant,
    PageGeometry, TextStyle, Word,
};
use super::templates as tpl;
use super::{GenConfig, GoldAttributes, GoldLabels, GoldSection, TokenSpan};
use crate::doc::{BlockKind, Document};
use crate::splitter::SectionType;

/// Chance that a filler clause carries a jurisdiction sentence whose local
/// context matches the true governing-law wording ("the laws of ...").
const HARD_DISTRACTOR_PROB: f64 = 0.09;
/// Chance of a jurisdiction sentence with different nearby context.
const MEDIUM_DISTRACTOR_PROB: f64 = 0.12;
/// Chance a listable filler clause renders as a lettered sub-clause list.
const LIST_PROB: f64 = 0.45;
/// Chance a fee clause carries a tabular fee schedule.
const TABLE_PROB: f64 = 0.5;
/// Minimum filler clauses regardless of the word target.
const MIN_FILLERS: usize = 8;

#[derive(Clone, Copy, PartialEq, Eq)]
enum HeadingScheme {
    /// "7. Confidentiality."
    Numbered,
    /// "ARTICLE III" group headings with "3.2 Confidentiality." numbering.
    Articles,
    /// Bold unnumbered headings with no terminal punctuation.
    UnnumberedBold,
}

struct DocProfile {
    title: &'static str,
    parties: (&'static str, &'static str),
    header: Option<HeaderStyle>,
    footer: Option<FooterStyle>,
    body_font: f64,
    heading_font: f64,
    heading_underline: bool,
    scheme: HeadingScheme,
    envelope_id: String,
    broken_span: bool,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum SpanKind {
    None,
    GoverningLaw,
    Expiration,
}

struct TableRowPlan {
    label: String,
    value: String,
}

enum BodyPlan {
    /// One entry per paragraph block.
    Paragraphs(Vec<String>),
    List {
        intro: String,
        items: Vec<String>,
    },
    Table {
        intro: String,
        rows: Vec<TableRowPlan>,
        /// Whether OCR sees each row as two side-by-side lines.
        split_rows: bool,
        outro: String,
    },
}

struct ClausePlan {
    /// Group heading emitted as its own one-line section before this clause.
    article_before: Option<String>,
    heading: String,
    body: BodyPlan,
    span: SpanKind,
    /// Answer text to locate inside the first paragraph when `span` is set.
    span_text: String,
}

struct DocPlan {
    preamble: String,
    recitals: Vec<String>,
    clauses: Vec<ClausePlan>,
    signature_sentence: String,
    signature_lines: Vec<String>,
    termination_for_convenience: bool,
    anti_assignment: bool,
}

pub(super) fn generate_doc(config: &GenConfig, i: usize) -> (Document, GoldLabels) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    // Stream 0 is reserved for the corpus split shuffle.
    rng.set_stream(1 + i as u64);
    let doc_id = format!("doc_{i:03}");

    let profile = draw_profile(config, &mut rng);
    let plan = draw_plan(config, &profile, &mut rng);
    emit_doc(config, &doc_id, &profile, &plan, &mut rng)
}

fn draw_profile(config: &GenConfig, rng: &mut ChaCha8Rng) -> DocProfile {
    let title = *tpl::AGREEMENT_TITLES.choose(rng).unwrap();
    let pick = index::sample(rng, tpl::PARTIES.len(), 2);
    let parties = (tpl::PARTIES[pick.index(0)], tpl::PARTIES[pick.index(1)]);

    let header = if config.header_prob > 0.0 && rng.gen_bool(config.header_prob) {
        let variant = *[
            HeaderVariant::RunningTitle,
            HeaderVariant::Confidential,
            HeaderVariant::EnvelopeStamp,
            HeaderVariant::TitleConfidential,
        ]
        .choose(rng)
        .unwrap();
        Some(HeaderStyle { variant, font_size: 8.0 })
    } else {
        None
    };
    let footer = if config.footer_prob > 0.0 && rng.gen_bool(config.footer_prob) {
        let variant = *[
            FooterVariant::BareNumber,
            FooterVariant::PageXofY,
            FooterVariant::Dashed,
            FooterVariant::TitleNumber,
            FooterVariant::ConfidentialNumber,
        ]
        .choose(rng)
        .unwrap();
        Some(FooterStyle { variant, font_size: 9.0, centered: rng.gen_bool(0.7) })
    } else {
        None
    };

    let body_font = *[10.0, 10.5, 11.0].choose(rng).unwrap();
    let scheme = {
        let r: f64 = rng.gen();
        if r < 0.45 {
            HeadingScheme::Numbered
        } else if r < 0.75 {
            HeadingScheme::Articles
        } else {
            HeadingScheme::UnnumberedBold
        }
    };
    DocProfile {
        title,
        parties,
        header,
        footer,
        body_font,
        heading_font: body_font + if rng.gen_bool(0.3) { 1.0 } else { 0.0 },
        heading_underline: rng.gen_bool(0.3),
        scheme,
        envelope_id: envelope_id(rng),
        broken_span: config.broken_span_prob > 0.0 && rng.gen_bool(config.broken_span_prob),
    }
}

fn envelope_id(rng: &mut ChaCha8Rng) -> String {
    const HEX: &[u8] = b"0123456789ABCDEF";
    let mut s = String::new();
    for (k, n) in [8usize, 4, 4, 4, 12].into_iter().enumerate() {
        if k > 0 {
            s.push('-');
        }
        for _ in 0..n {
            s.push(HEX[rng.gen_range(0..HEX.len())] as char);
        }
    }
    s
}

fn sample_target_words(config: &GenConfig, rng: &mut ChaCha8Rng) -> usize {
    let mean = config.mean_words_per_doc as f64;
    let raw = Normal::new(mean, 0.3 * mean).unwrap().sample(rng);
    raw.clamp((0.15 * mean).max(600.0), 2.5 * mean) as usize
}

fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

fn fill(template: &str, profile: &DocProfile, rng: &mut ChaCha8Rng) -> String {
    tpl::fill_template(template, profile.parties, rng)
}

fn choose<'a>(pool: &[&'a str], rng: &mut ChaCha8Rng) -> &'a str {
    pool.choose(rng).unwrap()
}

fn draw_plan(config: &GenConfig, profile: &DocProfile, rng: &mut ChaCha8Rng) -> DocPlan {
    let (p1, p2) = profile.parties;
    let effective_date = tpl::random_date(rng);
    let preamble = format!(
        "This {} (this \"Agreement\") is made and entered into as of {} (the \"Effective Date\"), by and between {} (\"Provider\") and {} (\"Client\").",
        profile.title, effective_date, p1, p2
    );
    let recitals = vec![
        fill(tpl::RECITALS[0], profile, rng),
        fill(tpl::RECITALS[if rng.gen_bool(0.5) { 1 } else { 2 }], profile, rng),
        fill(tpl::RECITALS[3], profile, rng),
    ];
    let signature_sentence = tpl::SIGNATURE_LINES[0].to_string();
    let mut signature_lines = Vec::new();
    for party in [p1, p2] {
        let officer = choose(tpl::OFFICER_NAMES, rng);
        let title = choose(tpl::OFFICER_TITLES, rng);
        signature_lines.push(party.to_uppercase());
        signature_lines.push(format!("By: /s/ {officer}"));
        signature_lines.push(format!("Name: {officer}"));
        signature_lines.push(format!("Title: {title}"));
    }

    // --- the four attribute-bearing clauses ---
    let jur = *tpl::JURISDICTIONS.choose(rng).unwrap();
    let gov_sentence = fill(
        &choose(tpl::GOVERNING_LAW_SENTENCES, rng)
            .replace("{LAWS_JUR}", &format!("the laws of {}", jur.phrase)),
        profile,
        rng,
    );
    let gov = ClausePlan {
        article_before: None,
        heading: choose(tpl::GOVERNING_LAW_HEADINGS, rng).to_string(),
        body: BodyPlan::Paragraphs(vec![gov_sentence]),
        span: SpanKind::GoverningLaw,
        span_text: jur.span.to_string(),
    };

    let exp_text = tpl::random_date(rng);
    let term_template = choose(tpl::TERM_SENTENCES, rng).replace("{EXP}", &exp_text);
    let mut term_sentence = fill(&term_template, profile, rng);
    // The commencement-date distractor must not duplicate the answer.
    for _ in 0..10 {
        if term_sentence.matches(exp_text.as_str()).count() == 1 {
            break;
        }
        term_sentence = fill(&term_template, profile, rng);
    }
    let mut term_body = term_sentence;
    if rng.gen_bool(0.6) {
        term_body.push(' ');
        term_body.push_str(&fill(choose(tpl::TERM_TAIL_SENTENCES, rng), profile, rng));
    }
    let term = ClausePlan {
        article_before: None,
        heading: choose(tpl::TERM_HEADINGS, rng).to_string(),
        body: BodyPlan::Paragraphs(vec![term_body]),
        span: SpanKind::Expiration,
        span_text: exp_text,
    };

    let t4c = rng.gen_bool(0.5);
    let mut termination_parts = vec![fill(
        choose(
            if t4c { tpl::TERMINATION_YES_SENTENCES } else { tpl::TERMINATION_NO_SENTENCES },
            rng,
        ),
        profile,
        rng,
    )];
    let n_tails = rng.gen_range(1..=2);
    for ti in index::sample(rng, tpl::TERMINATION_TAIL_SENTENCES.len(), n_tails).iter() {
        termination_parts.push(fill(tpl::TERMINATION_TAIL_SENTENCES[ti], profile, rng));
    }
    let termination = ClausePlan {
        article_before: None,
        heading: choose(tpl::TERMINATION_HEADINGS, rng).to_string(),
        body: BodyPlan::Paragraphs(vec![termination_parts.join(" ")]),
        span: SpanKind::None,
        span_text: String::new(),
    };

    let aa = rng.gen_bool(0.5);
    let mut assignment_parts = vec![fill(
        choose(
            if aa { tpl::ASSIGNMENT_YES_SENTENCES } else { tpl::ASSIGNMENT_NO_SENTENCES },
            rng,
        ),
        profile,
        rng,
    )];
    if rng.gen_bool(0.6) {
        assignment_parts.push(fill(choose(tpl::ASSIGNMENT_TAIL_SENTENCES, rng), profile, rng));
    }
    let assignment = ClausePlan {
        article_before: None,
        heading: choose(tpl::ASSIGNMENT_HEADINGS, rng).to_string(),
        body: BodyPlan::Paragraphs(vec![assignment_parts.join(" ")]),
        span: SpanKind::None,
        span_text: String::new(),
    };

    // --- filler clauses up to the word target ---
    let target = sample_target_words(config, rng);
    let mut words = word_count(&preamble)
        + recitals.iter().map(|s| word_count(s)).sum::<usize>()
        + word_count(&signature_sentence)
        + signature_lines.iter().map(|s| word_count(s)).sum::<usize>()
        + [&gov, &term, &termination, &assignment].iter().map(|c| clause_words(c)).sum::<usize>();
    let fees_family = tpl::FILLER_FAMILIES
        .iter()
        .position(|f| f.headings[0] == "Fees and Payment")
        .expect("fee family present");
    let mut fillers: Vec<ClausePlan> = Vec::new();
    let mut prev_family = usize::MAX;
    while words < target || fillers.len() < MIN_FILLERS {
        let mut fi = rng.gen_range(0..tpl::FILLER_FAMILIES.len());
        if fi == prev_family {
            fi = (fi + 1) % tpl::FILLER_FAMILIES.len();
        }
        prev_family = fi;
        let clause = draw_filler(fi, fi == fees_family, &jur, profile, rng);
        words += clause_words(&clause);
        fillers.push(clause);
    }

    // --- interleave the attribute clauses among the fillers ---
    let mut specials = vec![gov, term, termination, assignment];
    specials.shuffle(rng);
    let mut slots: Vec<usize> =
        index::sample(rng, fillers.len() - 2, 4).iter().map(|v| v + 2).collect();
    slots.sort_unstable_by(|a, b| b.cmp(a));
    let mut clauses = fillers;
    for (slot, special) in slots.into_iter().zip(specials.into_iter().rev()) {
        clauses.insert(slot, special);
    }

    apply_numbering(&mut clauses, profile.scheme, rng);

    DocPlan {
        preamble,
        recitals,
        clauses,
        signature_sentence,
        signature_lines,
        termination_for_convenience: t4c,
        anti_assignment: aa,
    }
}

fn draw_filler(
    family_idx: usize,
    is_fees: bool,
    gold_jur: &tpl::Jurisdiction,
    profile: &DocProfile,
    rng: &mut ChaCha8Rng,
) -> ClausePlan {
    let family = &tpl::FILLER_FAMILIES[family_idx];
    let heading = choose(family.headings, rng).to_string();
    let k = rng.gen_range(2..=family.sentences.len().min(5));
    let mut sentences: Vec<String> = index::sample(rng, family.sentences.len(), k)
        .iter()
        .map(|si| fill(family.sentences[si], profile, rng))
        .collect();

    let r: f64 = rng.gen();
    if r < HARD_DISTRACTOR_PROB + MEDIUM_DISTRACTOR_PROB {
        let pool = if r < HARD_DISTRACTOR_PROB {
            tpl::HARD_JURISDICTION_SENTENCES
        } else {
            tpl::MEDIUM_JURISDICTION_SENTENCES
        };
        let other = loop {
            let j = *tpl::JURISDICTIONS.choose(rng).unwrap();
            if j.phrase != gold_jur.phrase {
                break j;
            }
        };
        let sentence =
            fill(&choose(pool, rng).replace("{JUR}", other.phrase), profile, rng);
        sentences.push(sentence);
    }

    let body = if is_fees && rng.gen_bool(TABLE_PROB) {
        let n_rows = rng.gen_range(2..=4);
        let rows: Vec<TableRowPlan> = index::sample(rng, tpl::TABLE_ROW_LABELS.len(), n_rows)
            .iter()
            .map(|li| TableRowPlan {
                label: tpl::TABLE_ROW_LABELS[li].to_string(),
                value: choose(tpl::TABLE_ROW_VALUES, rng).to_string(),
            })
            .collect();
        BodyPlan::Table {
            intro: format!(
                "{} {}",
                sentences[0],
                fill(choose(tpl::TABLE_INTRO_SENTENCES, rng), profile, rng)
            ),
            rows,
            split_rows: rng.gen_bool(0.5),
            outro: fill(choose(tpl::TABLE_CLOSING_SENTENCES, rng), profile, rng),
        }
    } else if family.listable && sentences.len() >= 3 && rng.gen_bool(LIST_PROB) {
        let items = sentences.split_off(1);
        BodyPlan::List { intro: sentences.pop().unwrap(), items }
    } else if sentences.len() >= 4 && rng.gen_bool(0.3) {
        let tail = sentences.split_off(sentences.len() / 2);
        BodyPlan::Paragraphs(vec![sentences.join(" "), tail.join(" ")])
    } else {
        BodyPlan::Paragraphs(vec![sentences.join(" ")])
    };

    ClausePlan {
        article_before: None,
        heading,
        body,
        span: SpanKind::None,
        span_text: String::new(),
    }
}

fn clause_words(c: &ClausePlan) -> usize {
    let body = match &c.body {
        BodyPlan::Paragraphs(paras) => paras.iter().map(|p| word_count(p)).sum::<usize>(),
        BodyPlan::List { intro, items } => {
            word_count(intro) + items.iter().map(|s| word_count(s) + 1).sum::<usize>()
        }
        BodyPlan::Table { intro, rows, outro, .. } => {
            word_count(intro)
                + outro.split_whitespace().count()
                + rows.iter().map(|r| word_count(&r.label) + 1).sum::<usize>()
        }
    };
    word_count(&c.heading) + body
}

fn apply_numbering(clauses: &mut [ClausePlan], scheme: HeadingScheme, rng: &mut ChaCha8Rng) {
    match scheme {
        HeadingScheme::Numbered => {
            for (idx, c) in clauses.iter_mut().enumerate() {
                c.heading = format!("{}. {}.", idx + 1, c.heading);
            }
        }
        HeadingScheme::Articles => {
            let mut article = 0usize;
            let mut within = 0usize;
            let mut group_len = 0usize;
            for c in clauses.iter_mut() {
                if within == group_len {
                    article += 1;
                    within = 0;
                    group_len = rng.gen_range(4..=7);
                    c.article_before = Some(format!("ARTICLE {}", roman(article)));
                }
                within += 1;
                c.heading = format!("{article}.{within} {}.", c.heading);
            }
        }
        HeadingScheme::UnnumberedBold => {}
    }
}

fn roman(mut n: usize) -> String {
    const PAIRS: &[(usize, &str)] = &[
        (1000, "M"),
        (900, "CM"),
        (500, "D"),
        (400, "CD"),
        (100, "C"),
        (90, "XC"),
        (50, "L"),
        (40, "XL"),
        (10, "X"),
        (9, "IX"),
        (5, "V"),
        (4, "IV"),
        (1, "I"),
    ];
    let mut out = String::new();
    for &(value, symbol) in PAIRS {
        while n >= value {
            out.push_str(symbol);
            n -= value;
        }
    }
    out
}

fn item_letter(k: usize) -> char {
    (b'a' + (k % 26) as u8) as char
}

/// Strip surrounding punctuation and case-fold, the same normalization
/// the span matcher applies when locating answers in flowing text.
fn norm_token(s: &str) -> String {
    s.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase()
}

fn find_span_words(words: &[Word], span_text: &str) -> Option<(usize, usize)> {
    let needle: Vec<String> = span_text.split_whitespace().map(norm_token).collect();
    if needle.is_empty() || words.len() < needle.len() {
        return None;
    }
    let hay: Vec<String> = words.iter().map(|w| norm_token(&w.text)).collect();
    hay.windows(needle.len())
        .position(|win| win == needle.as_slice())
        .map(|k| (k, k + needle.len() - 1))
}

fn emit_doc(
    config: &GenConfig,
    doc_id: &str,
    profile: &DocProfile,
    plan: &DocPlan,
    rng: &mut ChaCha8Rng,
) -> (Document, GoldLabels) {
    let geom = PageGeometry::new(config.page_width, config.page_height);
    let body = TextStyle::plain(profile.body_font);
    let step = profile.body_font * 1.35;
    let heading_style = TextStyle {
        font_size: profile.heading_font,
        bold: true,
        italic: false,
        underline: profile.heading_underline,
    };
    let margin = geom.margin;

    let mut gov_span: Option<TokenSpan> = None;
    let mut exp_span: Option<TokenSpan> = None;

    let mut b = DocBuilder::new(
        rng,
        geom,
        config.style_noise,
        profile.header,
        profile.footer,
        profile.title,
        profile.envelope_id.clone(),
    );
    b.start_page();

    b.begin_block(BlockKind::Other);
    b.emit_outside_line(&words_of(profile.title, TextStyle::bold(14.0)), Align::Centered, 20.0);
    b.begin_block(BlockKind::Paragraph);
    b.flow_words(&words_of(&plan.preamble, body), &FlowOpts::untagged(margin, step));
    for recital in &plan.recitals {
        b.begin_block(BlockKind::Paragraph);
        b.flow_words(&words_of(recital, body), &FlowOpts::untagged(margin, step));
    }

    for clause in &plan.clauses {
        if let Some(article) = &clause.article_before {
            b.ensure_room(5.0, step);
            b.begin_block(BlockKind::Other);
            b.open_section(SectionType::Clause);
            b.emit_section_line(
                &words_of(article, TextStyle::bold(profile.heading_font + 1.0)),
                Align::Centered,
                step + 2.0,
            );
            b.close_section();
        }
        b.ensure_room(3.0, step);
        b.begin_block(BlockKind::Paragraph);
        b.open_section(SectionType::Clause);
        b.emit_section_line(&words_of(&clause.heading, heading_style), Align::Left(margin), step);
        match &clause.body {
            BodyPlan::Paragraphs(paras) => {
                for (pi, text) in paras.iter().enumerate() {
                    if pi > 0 {
                        b.begin_block(BlockKind::Paragraph);
                    }
                    let w = words_of(text, body);
                    let mut opts = FlowOpts::section(margin, step);
                    if pi == 0 && clause.span != SpanKind::None {
                        let marked = find_span_words(&w, &clause.span_text)
                            .expect("planned answer text present in its clause");
                        opts.marked = Some(marked);
                        if clause.span == SpanKind::GoverningLaw && profile.broken_span {
                            opts.break_before = Some(marked.1);
                        }
                    }
                    let got = b.flow_words(&w, &opts);
                    match clause.span {
                        SpanKind::GoverningLaw if pi == 0 => {
                            gov_span = got
                                .map(|(first, last)| TokenSpan { first_token: first, last_token: last });
                        }
                        SpanKind::Expiration if pi == 0 => {
                            exp_span = got
                                .map(|(first, last)| TokenSpan { first_token: first, last_token: last });
                        }
                        _ => {}
                    }
                }
                b.close_section();
            }
            BodyPlan::List { intro, items } => {
                b.flow_words(&words_of(intro, body), &FlowOpts::section(margin, step));
                b.close_section();
                b.begin_block(BlockKind::List);
                for (k, item) in items.iter().enumerate() {
                    let text = format!("({}) {}", item_letter(k), item);
                    b.open_section(SectionType::Subclause);
                    b.flow_words(&words_of(&text, body), &FlowOpts::section(margin + 22.0, step));
                    b.close_section();
                }
            }
            BodyPlan::Table { intro, rows, split_rows, outro } => {
                b.flow_words(&words_of(intro, body), &FlowOpts::section(margin, step));
                b.begin_block(BlockKind::Table);
                for row in rows {
                    if *split_rows {
                        b.emit_section_line_at(
                            &words_of(&row.label, body),
                            Align::Left(margin + 18.0),
                            step,
                            false,
                        );
                        b.emit_section_line(
                            &words_of(&row.value, body),
                            Align::Left(margin + 320.0),
                            step,
                        );
                    } else {
                        let text = format!("{} {}", row.label, row.value);
                        b.emit_section_line(&words_of(&text, body), Align::Left(margin + 18.0), step);
                    }
                }
                b.begin_block(BlockKind::Paragraph);
                b.flow_words(&words_of(outro, body), &FlowOpts::section(margin, step));
                b.close_section();
            }
        }
    }

    b.begin_block(BlockKind::Paragraph);
    b.flow_words(&words_of(&plan.signature_sentence, body), &FlowOpts::untagged(margin, step));
    b.begin_block(BlockKind::Other);
    for line in &plan.signature_lines {
        b.emit_outside_line(&words_of(line, body), Align::Left(margin), step);
    }

    let built = b.finish(doc_id);
    let mut sections: Vec<GoldSection> = built
        .sections
        .iter()
        .map(|&(ty, first, last)| GoldSection { section_type: ty, first_line: first, last_line: last })
        .collect();
    sections.sort_by_key(|s| s.first_line);

    let labels = GoldLabels {
        doc_id: doc_id.to_string(),
        line_labels: built.line_labels,
        sections,
        attributes: GoldAttributes {
            expiration_date: Some(exp_span.expect("term clause records an expiration span")),
            governing_law: Some(gov_span.expect("governing-law clause records a span")),
            termination_for_convenience: plan.termination_for_convenience,
            anti_assignment: plan.anti_assignment,
        },
    };
    (built.document, labels)
}
