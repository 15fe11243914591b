//! Configuration, reports and commands of the `levy-drift` tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod exec;
pub mod io;
pub mod report;
