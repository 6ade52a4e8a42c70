//! Batch experiments for many-objective Bayesian optimization with
//! objective reduction: config files, sweeps, similarity studies and plot data.

pub mod config;
pub mod experiment;
pub mod plotdata;
pub mod study;
