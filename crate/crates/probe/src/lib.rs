//! File formats, cached and subprocess backends, the experiment runner and
//! report tables for the probes in [`scalar_probe_core`].
//!
//! A run is described by one TOML file (see [`config::ExperimentConfig`]);
//! [`runner::run`] loads the data, builds the backend, executes the probe
//! and returns a [`record::RunRecord`], which the `probe` binary writes to
//! `runs/<config-hash>/record.json`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cache;
pub mod config;
pub mod error;
pub mod formats;
pub mod process;
pub mod record;
pub mod report;
pub mod runner;

pub use error::{Error, Result};
pub use scalar_probe_core as core;
