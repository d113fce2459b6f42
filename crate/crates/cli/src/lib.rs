//! Experiment runner for the `ctkrylov` library: builds matrices, runs
//! solvers and analyses from a flat-text config and writes CSV, Matrix
//! Market and PGM artifacts.

pub mod commands;
pub mod config;
pub mod error;

pub use config::ExperimentConfig;
pub use error::CliError;
