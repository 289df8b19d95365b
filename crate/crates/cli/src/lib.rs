//! Document parsing, reports and subcommands behind the `invzero` binary.

pub mod commands;
pub mod document;
pub mod error;
pub mod report;
