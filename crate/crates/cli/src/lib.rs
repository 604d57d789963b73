//! Command-line front end for the SUHNPF solver: runs solves and the
//! linear-scalarisation baseline, writes CSV/JSON artifacts, and scores
//! fronts against the analytic solutions.

pub mod commands;
pub mod manifest;
pub mod tables;

pub use commands::{BaselineConfig, EvalSummary, ReportFile};
pub use manifest::RunManifest;
pub use tables::Table;
