//! Library backing the `dfgp` binary: config schema and validation,
//! artifact writers, and subcommand execution. Kept as a library so the
//! plumbing is unit-testable without spawning processes.

pub mod commands;
pub mod config;
pub mod output;
