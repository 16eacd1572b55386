//! Library surface of the `placenet` binary: configuration loading, stage
//! execution, and report assembly, exposed so integration tests can drive
//! the pieces directly.

pub mod config;
pub mod pipeline;
pub mod report;
