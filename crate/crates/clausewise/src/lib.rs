//! Section splitting and attribute extraction for long OCR'd contracts.
//!
//! The pipeline has three stages:
//!
//! 1. a linear-chain CRF tags every visual line with a BIO section tag
//!    (clause, sub-clause, header, footer) using text plus OCR-metadata
//!    features ([`splitter`], [`features`], [`crf`]);
//! 2. tagged lines are assembled into typed sections whose clean text
//!    drops headers and footers and repairs sentences broken across page
//!    boundaries ([`splitter`]);
//! 3. per-attribute extractors answer contract questions (expiration
//!    date, governing law, termination for convenience, anti-assignment)
//!    over the most relevant sections ([`extract`]), with a regex rule
//!    engine as a baseline ([`rules`]).
//!
//! [`corpus`] generates the seeded synthetic contracts used to train and
//! evaluate everything; [`eval`] holds metrics and the experiment
//! harnesses (feature ablation, document-length degradation, pipeline
//! comparison).

pub mod corpus;
pub mod crf;
pub mod doc;
pub mod eval;
pub mod extract;
pub mod features;
pub mod logreg;
pub mod optimize;
pub mod rules;
pub mod splitter;

pub use doc::{Document, LineRef};
