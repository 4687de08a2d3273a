//! Library half of the ordidx CLI: run configuration, output records and
//! their schemas, the residue cache format, and deterministic parallel
//! drivers over the core evaluators.

pub mod cache;
pub mod config;
pub mod formats;
pub mod parallel;
