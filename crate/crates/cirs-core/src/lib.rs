//! Complexity-impacted scoring of code rationales.
//!
//! The pipeline: parse each snippet into a syntax tree, read off three
//! structural features (node count, distinct node kinds, tree depth) and
//! two logical measures (Halstead difficulty, cyclomatic complexity), then
//! combine a corpus-normalized structural score with a per-snippet logical
//! score into one number per record. On top of that sit a threshold-based
//! 1-D k-means stratifier for partitioning corpora into low/medium/high
//! bands and a template-driven synthesis loop for generating new records
//! behind a pluggable client.

pub mod corpus;
pub mod cyclomatic;
pub mod error;
pub mod frontend;
pub mod halstead;
pub mod logical;
pub mod report;
pub mod rules;
pub mod score;
pub mod stats;
pub mod stratify;
pub mod synth;

pub use error::{Error, Result};
