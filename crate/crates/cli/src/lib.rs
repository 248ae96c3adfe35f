//! Command-line front end and simulation harness for `imlsbm`.

pub mod cli;
pub mod commands;
pub mod config;
pub mod experiment;
pub mod pipeline;
