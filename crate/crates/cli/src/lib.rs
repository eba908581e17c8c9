//! Campaign runner behind the `surfride` binary.
//!
//! A campaign file names a ship, a sea state and the run settings; each
//! subcommand reads it, writes CSV/JSON artifacts into the output directory
//! and records what it did in `manifest.json` there.

pub mod commands;
pub mod config;
pub mod output;
