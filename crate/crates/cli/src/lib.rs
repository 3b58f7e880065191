//! Command-line front end for the separation, mapping and benchmark tools.
//!
//! Every command is a plain function here so it can be driven from tests as
//! well as from the `spikesep` binary.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use commands::{cmd_bench, cmd_despike, cmd_map, cmd_simulate};
pub use config::RunConfig;
pub use error::{CliError, CliResult};
