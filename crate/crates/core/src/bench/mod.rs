//! Experiment harness: instance generation, metrics, file formats and the
//! recovery and kernel benchmark suites.

pub mod data;
pub mod metrics;
pub mod config;
pub mod io;
pub mod recovery;
pub mod kernel_suite;
