//! Command-line driver: configs, model fitting, planning runs, comparison
//! tables and scene export.

pub mod bundle;
pub mod cli;
pub mod compare;
pub mod config;
pub mod error;
pub mod export;
pub mod io;
pub mod model;

pub use error::CliError;
