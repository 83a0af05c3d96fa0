//! Configuration, orchestration and verification behind the `ewm` binary.

pub mod config;
pub mod pipeline;
pub mod verify;

pub use config::JobConfig;
