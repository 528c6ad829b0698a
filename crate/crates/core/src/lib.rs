//! Allocation-only building blocks for generating and scoring media
//! background checks (MBCs).
//!
//! Everything in this crate is a pure function over text: lexical metrics,
//! entailment vote aggregation, fact scoring, prompt rendering, MBC document
//! parsing, search-result exclusion and the fixed query plan. IO, providers
//! and the command line live in the `mbc` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod document;
pub mod exclusion;
pub mod lexmetrics;
pub mod oracle;
pub mod prompts;
pub mod query;
pub mod scoring;
pub mod text;
pub mod verdict;

pub use document::{BackgroundCheck, Section, Split};
pub use exclusion::{ExclusionRules, SearchResult};
pub use query::{QueryItem, QueryPlan};
pub use verdict::{Label, EntailmentVotes};
