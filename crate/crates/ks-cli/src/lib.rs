//! Batch driver for the spectral laboratory: configuration parsing,
//! parameter sweeps, report serialization, and the invariant suite.

pub mod checks;
pub mod commands;
pub mod config;
pub mod report;
