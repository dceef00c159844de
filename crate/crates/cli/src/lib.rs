//! Command-line front end for the `tokenlab` analytics crate: subcommand
//! analyses, CSV table emission and the all-tables report.

pub mod analysis;
pub mod app;
pub mod output;
pub mod report;
pub mod summary;
