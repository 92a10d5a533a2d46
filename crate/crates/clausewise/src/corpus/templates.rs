//! Text pools for the synthetic contract generator.
//!
//! Sentences are templates with `{...}` placeholders filled at sample
//! time. Placeholder vocabulary: `{P}`/`{P2}` party names, `{DAYS}` a
//! spelled-out day count, `{DATE}` a date, `{N}` a dollar amount,
//! `{JUR}` a jurisdiction phrase.

use rand::seq::SliceRandom;
use rand::Rng;

/// A governing-law jurisdiction: the phrase as it appears after
/// "the laws of ", and the answer span inside it (the phrase minus a
/// leading article).
#[derive(Debug, Clone, Copy)]
pub struct Jurisdiction {
    pub phrase: &'static str,
    pub span: &'static str,
}

pub const JURISDICTIONS: &[Jurisdiction] = &[
    Jurisdiction { phrase: "the State of Massachusetts", span: "State of Massachusetts" },
    Jurisdiction { phrase: "the State of Ohio", span: "State of Ohio" },
    Jurisdiction { phrase: "the State of New York", span: "State of New York" },
    Jurisdiction { phrase: "the State of California", span: "State of California" },
    Jurisdiction { phrase: "the State of Delaware", span: "State of Delaware" },
    Jurisdiction { phrase: "the State of Texas", span: "State of Texas" },
    Jurisdiction { phrase: "the State of Washington", span: "State of Washington" },
    Jurisdiction { phrase: "the State of Illinois", span: "State of Illinois" },
    Jurisdiction { phrase: "the State of Georgia", span: "State of Georgia" },
    Jurisdiction { phrase: "the State of Florida", span: "State of Florida" },
    Jurisdiction { phrase: "the State of Minnesota", span: "State of Minnesota" },
    Jurisdiction { phrase: "the State of Colorado", span: "State of Colorado" },
    Jurisdiction { phrase: "the State of Arizona", span: "State of Arizona" },
    Jurisdiction { phrase: "the State of Nevada", span: "State of Nevada" },
    Jurisdiction { phrase: "the Commonwealth of Pennsylvania", span: "Commonwealth of Pennsylvania" },
    Jurisdiction { phrase: "the Commonwealth of Virginia", span: "Commonwealth of Virginia" },
    Jurisdiction { phrase: "the Province of Ontario", span: "Province of Ontario" },
    Jurisdiction { phrase: "the State of New Jersey", span: "State of New Jersey" },
];

pub const PARTIES: &[&str] = &[
    "Acme Corporation",
    "BetaSoft LLC",
    "Cobalt Industries",
    "Dynamo Partners",
    "Evergreen Holdings",
    "Foxglove Systems",
    "Granite Peak Capital",
    "Harbor Analytics",
    "Ironwood Manufacturing",
    "Juniper Networks Group",
    "Keystone Logistics",
    "Lakeshore Medical",
    "Meridian Software",
    "Northstar Energy",
];

pub const DAY_PHRASES: &[&str] = &[
    "ten (10)",
    "fifteen (15)",
    "thirty (30)",
    "forty-five (45)",
    "sixty (60)",
    "ninety (90)",
];

pub const MONTHS: &[&str] = &[
    "January", "February", "March", "April", "May", "June", "July", "August", "September",
    "October", "November", "December",
];

pub const AMOUNTS: &[&str] = &[
    "$5,000", "$12,500", "$25,000", "$100,000", "$250,000", "$1,000,000", "$7,500", "$48,000",
];

/// Agreement titles, also reused for running headers and footers.
pub const AGREEMENT_TITLES: &[&str] = &[
    "MASTER SERVICES AGREEMENT",
    "SOFTWARE LICENSE AGREEMENT",
    "SUPPLY AGREEMENT",
    "CONSULTING AGREEMENT",
    "DISTRIBUTION AGREEMENT",
    "MAINTENANCE AND SUPPORT AGREEMENT",
];

/// One reusable clause family: heading choices plus a sentence pool.
#[derive(Debug)]
pub struct ClauseFamily {
    pub headings: &'static [&'static str],
    pub sentences: &'static [&'static str],
    /// Whether this family may be rendered as a lettered sub-clause list.
    pub listable: bool,
}

pub const FILLER_FAMILIES: &[ClauseFamily] = &[
    ClauseFamily {
        headings: &["Confidentiality", "Confidential Information", "Non-Disclosure"],
        sentences: &[
            "Each party shall hold in strict confidence all Confidential Information of the other party and shall not disclose such information to any third party without prior written consent.",
            "Confidential Information does not include information that is or becomes publicly available through no fault of the receiving party.",
            "The receiving party shall use Confidential Information solely to perform its obligations under this Agreement.",
            "Each party shall protect the other party's Confidential Information using at least the same degree of care it uses for its own similar information, and in no event less than reasonable care.",
            "Upon written request, the receiving party shall promptly return or destroy all Confidential Information of the disclosing party.",
        ],
        listable: true,
    },
    ClauseFamily {
        headings: &["Notices", "Notice"],
        sentences: &[
            "All notices under this Agreement shall be in writing and delivered by hand, by certified mail, or by reputable overnight courier to the addresses set forth on the signature page.",
            "Notices are deemed given upon receipt or upon refusal of delivery.",
            "Either party may change its notice address by giving notice in the manner stated in this Section.",
            "A copy of any legal notice shall be sent concurrently to the recipient's counsel of record.",
        ],
        listable: false,
    },
    ClauseFamily {
        headings: &["Indemnification", "Indemnity"],
        sentences: &[
            "{P} shall defend, indemnify, and hold harmless {P2} from and against all third-party claims, damages, and expenses arising out of {P}'s gross negligence or willful misconduct.",
            "The indemnified party shall promptly notify the indemnifying party of any claim and shall reasonably cooperate in the defense at the indemnifying party's expense.",
            "The indemnifying party may not settle any claim that imposes liability on the indemnified party without the indemnified party's prior written consent.",
            "This Section states the indemnified party's exclusive remedy for the third-party claims described herein.",
        ],
        listable: true,
    },
    ClauseFamily {
        headings: &["Limitation of Liability", "Liability Cap"],
        sentences: &[
            "In no event shall either party be liable for any indirect, incidental, special, or consequential damages, even if advised of the possibility of such damages.",
            "Each party's aggregate liability under this Agreement shall not exceed the fees paid or payable in the twelve (12) months preceding the event giving rise to the claim.",
            "The limitations in this Section do not apply to breaches of confidentiality or to the parties' indemnification obligations.",
            "The parties acknowledge that the fees reflect the allocation of risk set forth in this Section.",
        ],
        listable: false,
    },
    ClauseFamily {
        headings: &["Force Majeure", "Excused Performance"],
        sentences: &[
            "Neither party shall be liable for any delay or failure to perform due to causes beyond its reasonable control, including acts of God, labor disputes, utility failures, or governmental action.",
            "The affected party shall promptly notify the other party and shall use commercially reasonable efforts to resume performance.",
            "Performance obligations are suspended for the duration of the force majeure event.",
            "If an event of force majeure continues for more than {DAYS} days, the parties shall meet to discuss an equitable adjustment.",
        ],
        listable: false,
    },
    ClauseFamily {
        headings: &["Insurance", "Insurance Requirements"],
        sentences: &[
            "{P} shall maintain commercial general liability insurance with limits of not less than {N} per occurrence during the term of this Agreement.",
            "All required policies shall be issued by insurers with an A.M. Best rating of A- or better.",
            "Upon request, {P} shall furnish certificates of insurance evidencing the coverage required by this Section.",
            "Required coverage shall name {P2} as an additional insured.",
        ],
        listable: true,
    },
    ClauseFamily {
        headings: &["Independent Contractor", "Relationship of the Parties"],
        sentences: &[
            "The parties are independent contractors, and nothing in this Agreement creates any partnership, joint venture, agency, or employment relationship.",
            "Neither party has authority to bind the other or to incur obligations on the other's behalf.",
            "Each party is solely responsible for the compensation, benefits, and taxes of its own personnel.",
        ],
        listable: false,
    },
    ClauseFamily {
        headings: &["Entire Agreement", "Integration", "Amendment"],
        sentences: &[
            "This Agreement, together with its exhibits, constitutes the entire agreement of the parties with respect to its subject matter and supersedes all prior and contemporaneous understandings.",
            "No amendment to this Agreement is effective unless in writing and signed by authorized representatives of both parties.",
            "In the event of a conflict between this Agreement and any exhibit, the terms of this Agreement control.",
            "No terms on any purchase order or click-through form shall modify this Agreement.",
        ],
        listable: false,
    },
    ClauseFamily {
        headings: &["Severability"],
        sentences: &[
            "If any provision of this Agreement is held invalid or unenforceable, the remaining provisions shall continue in full force and effect.",
            "The parties shall replace any invalid provision with a valid provision that most closely approximates the original intent.",
            "A holding of invalidity in one jurisdiction shall not affect the validity of this Agreement elsewhere.",
        ],
        listable: false,
    },
    ClauseFamily {
        headings: &["Waiver", "No Waiver"],
        sentences: &[
            "No failure or delay by either party in exercising any right under this Agreement operates as a waiver of that right.",
            "A waiver is effective only if in writing and signed by the waiving party.",
            "A waiver of any breach does not waive any subsequent breach.",
        ],
        listable: false,
    },
    ClauseFamily {
        headings: &["Fees and Payment", "Fees", "Payment Terms"],
        sentences: &[
            "Client shall pay all undisputed fees within {DAYS} days after the date of each invoice.",
            "Fees for the initial service period were invoiced on {DATE} and are non-refundable except as expressly stated herein.",
            "Late payments accrue interest at the lesser of one and one-half percent (1.5%) per month or the maximum rate permitted by applicable law.",
            "All fees are exclusive of taxes, and Client is responsible for all applicable sales, use, and excise taxes.",
            "Annual fees shall not increase by more than five percent (5%) over the fees for the prior twelve-month period.",
        ],
        listable: true,
    },
    ClauseFamily {
        headings: &["Compliance with Laws", "Regulatory Compliance"],
        sentences: &[
            "Each party shall obtain and maintain all permits, licenses, and registrations required for the performance of its obligations.",
            "{P} shall not export or re-export any technical data received hereunder in violation of applicable export control regulations.",
            "Each party shall perform its obligations in a manner consistent with all applicable anti-corruption statutes.",
            "Each party represents that it is not listed on any government list of prohibited or restricted parties.",
        ],
        listable: false,
    },
    ClauseFamily {
        headings: &["Dispute Resolution", "Disputes"],
        sentences: &[
            "The parties shall first attempt in good faith to resolve any dispute by negotiation between executives with authority to settle the matter.",
            "If a dispute is not resolved within {DAYS} days, either party may pursue any remedy available at law or in equity.",
            "Each party shall continue performing its undisputed obligations during the pendency of any dispute.",
            "The prevailing party in any action to enforce this Agreement is entitled to recover its reasonable attorneys' fees and costs.",
        ],
        listable: false,
    },
    ClauseFamily {
        headings: &["Audit", "Records and Audit"],
        sentences: &[
            "{P} shall keep complete and accurate records of all amounts billable under this Agreement for at least three (3) years.",
            "{P2} may audit such records upon {DAYS} days' prior written notice, no more than once per calendar year.",
            "If an audit reveals an overcharge of more than five percent (5%), {P} shall bear the reasonable cost of the audit.",
            "Audits shall be conducted during regular business hours and in a manner that does not unreasonably interfere with operations.",
        ],
        listable: false,
    },
    ClauseFamily {
        headings: &["Publicity", "Use of Marks"],
        sentences: &[
            "Neither party shall issue any press release regarding this Agreement without the prior written approval of the other party.",
            "Neither party shall use the other party's trademarks except as expressly permitted in writing.",
            "{P} may identify {P2} as a customer in its marketing materials in text form only.",
        ],
        listable: false,
    },
];

/// Jurisdiction-bearing sentences that are *not* governing-law answers.
///
/// "Hard" sentences reproduce the exact local context of the true answer
/// (`... the laws of the State of X ...`); "medium" ones share the span
/// words but differ in the nearby context.
pub const HARD_JURISDICTION_SENTENCES: &[&str] = &[
    "{P} shall at all times comply with the laws of {JUR} applicable to its performance under this Agreement.",
    "Each party shall conduct its business in material compliance with the laws of {JUR} and of every other jurisdiction in which it operates.",
];

pub const MEDIUM_JURISDICTION_SENTENCES: &[&str] = &[
    "Any suit arising out of this Agreement shall be brought exclusively in the state or federal courts located in {JUR}, and each party consents to the personal jurisdiction of such courts.",
    "{P} represents that it is duly organized and validly existing in {JUR} and has full power to enter into this Agreement.",
];

/// Governing-law sentence templates. `{LAWS_JUR}` expands to
/// `the laws of <jurisdiction phrase>`, which carries the answer span.
pub const GOVERNING_LAW_HEADINGS: &[&str] = &["Governing Law", "Applicable Law", "Choice of Law"];
pub const GOVERNING_LAW_SENTENCES: &[&str] = &[
    "This Agreement shall be governed by and construed in accordance with {LAWS_JUR}, without regard to its conflict of laws principles.",
    "This Agreement shall be construed and interpreted in accordance with {LAWS_JUR}, without recourse to any principles of law governing conflicts of laws.",
    "This Agreement and all matters arising out of or relating to this Agreement shall be governed by {LAWS_JUR}.",
    "The validity, interpretation, and performance of this Agreement shall be governed by {LAWS_JUR}, excluding its conflicts of law rules.",
];

pub const TERM_HEADINGS: &[&str] = &["Term", "Term of Agreement", "Term and Renewal"];
/// `{EXP}` carries the expiration-date answer span.
pub const TERM_SENTENCES: &[&str] = &[
    "This Agreement shall commence on {DATE} and shall continue in full force and effect until {EXP}, unless earlier terminated in accordance with its terms.",
    "The term of this Agreement begins on the Effective Date and expires on {EXP}.",
    "This Agreement is effective as of {DATE} and shall remain in effect until {EXP}.",
    "The initial term of this Agreement shall end on {EXP}, subject to renewal upon mutual written agreement of the parties.",
];

pub const TERM_TAIL_SENTENCES: &[&str] = &[
    "This Agreement shall renew for successive one-year periods unless either party gives notice of non-renewal at least {DAYS} days before the end of the then-current term.",
    "Renewal pricing shall be agreed in writing before the start of each renewal period.",
];

pub const TERMINATION_HEADINGS: &[&str] = &["Termination", "Termination Rights"];
pub const TERMINATION_YES_SENTENCES: &[&str] = &[
    "Either party may terminate this Agreement at any time for convenience upon {DAYS} days' prior written notice to the other party.",
    "{P} may terminate this Agreement at will upon {DAYS} days' written notice.",
    "Either party may terminate this Agreement at any time, with or without cause, upon {DAYS} days' notice.",
    "This Agreement may be terminated by either party for any reason or for no reason upon {DAYS} days' notice.",
];
pub const TERMINATION_NO_SENTENCES: &[&str] = &[
    "Either party may terminate this Agreement if the other party materially breaches this Agreement and fails to cure such breach within {DAYS} days after written notice.",
    "This Agreement may be terminated by either party upon the bankruptcy or insolvency of the other party.",
    "Either party may terminate this Agreement for cause upon written notice of an uncured material default.",
    "{P} may terminate this Agreement immediately if {P2} fails to maintain the insurance required by this Agreement.",
];
pub const TERMINATION_TAIL_SENTENCES: &[&str] = &[
    "Upon any termination, each party shall promptly return all property of the other party.",
    "Sections that by their nature should survive termination shall so survive.",
    "Termination does not relieve either party of obligations accrued before the effective date of termination.",
];

pub const ASSIGNMENT_HEADINGS: &[&str] =
    &["Assignment", "Assignment and Delegation", "Successors and Assigns"];
pub const ASSIGNMENT_YES_SENTENCES: &[&str] = &[
    "Neither party may assign this Agreement or any of its rights or obligations hereunder without the prior written consent of the other party.",
    "{P} shall not assign, transfer, or delegate this Agreement, in whole or in part, without the express written consent of {P2}.",
    "This Agreement may not be assigned by either party without the prior written approval of the other party, and any attempted assignment in violation of this Section shall be void.",
    "The rights and duties hereunder are personal to the parties, and no assignment shall be effective without the written consent of the non-assigning party.",
];
pub const ASSIGNMENT_NO_SENTENCES: &[&str] = &[
    "Either party may freely assign this Agreement in whole or in part upon written notice to the other party.",
    "This Agreement shall be binding upon and inure to the benefit of the parties and their respective successors and assigns, and either party may assign this Agreement without restriction.",
    "{P} may assign its rights and obligations under this Agreement to any affiliate or to any successor in interest.",
];
pub const ASSIGNMENT_TAIL_SENTENCES: &[&str] = &[
    "Any permitted assignee shall assume in writing all obligations of the assignor hereunder.",
    "Each party shall notify the other of any permitted assignment within a reasonable time.",
];

/// Recital sentences for the untagged preamble below the title block.
pub const RECITALS: &[&str] = &[
    "WHEREAS, {P} is engaged in the business of developing and supplying products and services of the kind contemplated by this Agreement;",
    "WHEREAS, {P2} desires to obtain from {P}, and {P} desires to provide to {P2}, certain products and services on the terms set forth herein;",
    "WHEREAS, the parties wish to set forth the terms and conditions under which they will conduct the activities described in this Agreement;",
    "NOW, THEREFORE, in consideration of the mutual covenants contained herein, the parties agree as follows:",
];

/// Closing lines for the untagged signature block.
pub const SIGNATURE_LINES: &[&str] = &[
    "IN WITNESS WHEREOF, the parties have executed this Agreement as of the date first written above.",
];

pub const OFFICER_NAMES: &[&str] = &[
    "J. Alvarez",
    "M. Chen",
    "R. Patel",
    "S. Novak",
    "T. Okafor",
    "L. Bergström",
    "D. Romano",
    "K. Whitfield",
];

pub const OFFICER_TITLES: &[&str] = &[
    "Chief Executive Officer",
    "President",
    "Chief Financial Officer",
    "General Counsel",
    "Vice President, Operations",
];

/// Sentence appended after a fee table so clause text resumes below it.
pub const TABLE_CLOSING_SENTENCES: &[&str] = &[
    "The fees set forth above are exclusive of all taxes, duties, and assessments.",
    "The amounts listed above are payable in accordance with the invoicing terms of this Agreement.",
];

/// Sentences introducing a fee table.
pub const TABLE_INTRO_SENTENCES: &[&str] = &[
    "{P2} shall pay {P} the fees set forth below.",
    "The charges for the services are listed in the following schedule.",
];

/// Table row labels for fee-schedule blocks.
pub const TABLE_ROW_LABELS: &[&str] = &[
    "Consulting Services",
    "Implementation",
    "Support and Maintenance",
    "Training",
    "License Fees",
    "Hosting",
    "Travel Expenses",
];

/// Short numeric cell values; several collide with plausible page numbers.
pub const TABLE_ROW_VALUES: &[&str] =
    &["4", "7", "12", "18", "36", "51", "120", "$9,500", "$24,000", "$1,250"];

/// Fill a template's placeholders. `{P}`/`{P2}` come from `parties`;
/// other placeholders draw fresh samples from `rng`.
pub fn fill_template(template: &str, parties: (&str, &str), rng: &mut impl Rng) -> String {
    let mut out = template.to_string();
    // Replace one occurrence at a time so repeated {DAYS} can differ.
    loop {
        let Some(start) = out.find('{') else { break };
        let Some(rel_end) = out[start..].find('}') else { break };
        let end = start + rel_end;
        let key = &out[start + 1..end];
        let replacement = match key {
            "P" => parties.0.to_string(),
            "P2" => parties.1.to_string(),
            "DAYS" => DAY_PHRASES.choose(rng).unwrap().to_string(),
            "DATE" => random_date(rng),
            "N" => AMOUNTS.choose(rng).unwrap().to_string(),
            "JUR" => JURISDICTIONS.choose(rng).unwrap().phrase.to_string(),
            other => panic!("unknown template placeholder {{{other}}}"),
        };
        out.replace_range(start..=end, &replacement);
    }
    out
}

pub fn random_date(rng: &mut impl Rng) -> String {
    let month = MONTHS.choose(rng).unwrap();
    let day = rng.gen_range(1..=28);
    let year = rng.gen_range(2015..=2027);
    format!("{month} {day}, {year}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fill_template_replaces_every_placeholder() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = fill_template(
            "{P} owes {P2} {N} within {DAYS} days of {DATE} under the laws of {JUR}.",
            ("Acme", "Beta"),
            &mut rng,
        );
        assert!(!s.contains('{'), "unfilled placeholder in {s:?}");
        assert!(s.starts_with("Acme owes Beta $"));
    }

    #[test]
    fn jurisdiction_spans_sit_inside_their_phrases() {
        for j in JURISDICTIONS {
            assert!(j.phrase.ends_with(j.span), "{:?}", j);
        }
    }
}
