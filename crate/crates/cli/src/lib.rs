//! Command-line front end and HTTP service for `flaresynth`.
//!
//! [`ops`] holds the operations shared by both front ends so that a render
//! through the service is byte-identical to the same render from the CLI.

pub mod cli;
pub mod ops;
pub mod service;
