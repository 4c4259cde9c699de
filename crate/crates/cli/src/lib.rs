//! Command-line pipeline around `qcone-core`.

pub mod config;
pub mod error;
pub mod ingest;
pub mod pipeline;
pub mod synth;
pub mod tables;
