//! Command-line front end for `whitney-core`.

pub mod commands;
pub mod error;
pub mod format;
pub mod suites;
