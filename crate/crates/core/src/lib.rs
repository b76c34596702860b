//! Streaming behavioral analytics over threaded discussion dumps.
//!
//! The crate reads newline-delimited post and comment dumps, rebuilds
//! per-post comment trees, and derives post-level, thread-level and
//! author-level measurements together with their distributions and
//! heavy-tail fits.

pub mod authors;
pub mod classify;
pub mod exec;
pub mod ingest;
pub mod limelight;
pub mod stats;
pub mod synth;
pub mod thread;
pub mod pipeline;
pub mod report;
