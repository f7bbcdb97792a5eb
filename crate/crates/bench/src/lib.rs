//! Experiment harness for the rlsched simulator: configuration, trace files,
//! training and evaluation of schedulers, sweeps, and report emission.

pub mod config;
pub mod harness;
pub mod model;
pub mod report;
pub mod trace;
