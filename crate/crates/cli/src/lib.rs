//! Command-line front end for the planners: experiment configs, bundled and
//! random maps, benchmarks, risk sweeps and SVG output.
//!
//! Every subcommand of the `bliss` binary is a plain function in
//! [`commands`], so the same work can be scripted from Rust.

pub mod commands;
pub mod config;
pub mod error;
pub mod maps;
pub mod svg;

pub use error::{CliError, Result};
