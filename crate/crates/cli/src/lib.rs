//! Command-line driver for the obstacle-mass solver: config ingestion,
//! subcommands, persisted runs and manifests.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod commands;
pub mod config;
pub mod manifest;
pub mod persist;
