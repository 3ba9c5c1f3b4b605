//! Signed ego networks from directed interaction logs.
//!
//! The pipeline runs in five stages, each usable on its own:
//!
//! 1. [`corpus`] parses JSONL interaction logs and filters unengaged egos;
//! 2. [`sentiment`] labels each interaction negative, neutral or positive;
//! 3. [`signing`] turns per-relationship label counts into a sign;
//! 4. [`egonet`] finds the active alters and clusters them into circles;
//! 5. [`report`] aggregates everything into dataset-level tables.
//!
//! [`synth`] generates corpora with known ground truth and [`pipeline`]
//! wires the stages together with on-disk artifacts.

pub mod corpus;
pub mod egonet;
pub mod report;
pub mod sentiment;
pub mod signing;
pub mod stats;
pub mod synth;
pub mod pipeline;
