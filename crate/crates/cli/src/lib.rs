//! Library surface of the `capwave` CLI: scenario drivers, artifact
//! emission, and configuration plumbing. The binary in `main.rs` is a thin
//! dispatcher over these; the acceptance suite reuses the drivers.

pub mod artifact;
pub mod config;
pub mod scenarios;
