//! Media background check pipeline: corpus ingestion, retrieval-augmented
//! generation, atomic-fact evaluation and downstream QA.

pub mod cache;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod extraction;
pub mod html;
pub mod providers;
pub mod qa;
pub mod retrieval;
pub mod synthesis;
pub mod throttle;

pub use mbc_core as core;

pub use error::{Error, Result};
