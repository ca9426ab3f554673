//! Library half of the `abrsim` binary.
//!
//! The command implementations live here (rather than in `main.rs`) so
//! integration tests can drive them directly and the binary stays a thin
//! argument-parsing shell.

pub mod commands;
pub mod experiment;
