//! On-disk formats: cognate matrices, calibrations, run configuration,
//! traces and Newick trees.

pub mod calibration;
pub mod config;
pub mod matrix;
pub mod newick;
pub mod trace;
