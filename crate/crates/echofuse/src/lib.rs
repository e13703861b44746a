//! Files, configuration and the `echofuse` command-line tool on top of
//! [`echofuse_core`].

pub mod cli;
pub mod config;
pub mod io;

pub use echofuse_core as core;
