//! Command-line front end for the recycled-qubit cluster-state simulator:
//! noise configuration files, output formats and the subcommands.

pub mod commands;
pub mod config;
pub mod formats;
