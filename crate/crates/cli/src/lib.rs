//! File formats and the command-line front-end of the entity-alignment pipeline.
//!
//! Every file is UTF-8 text. Triples and seed pairs are tab-separated, `#` starts
//! a comment line, and outputs are written in a fixed order so that reruns with
//! the same inputs and seed are byte-identical.

pub mod commands;
pub mod error;
pub mod formats;

pub use commands::run;
pub use error::{CliError, Result};
