//! Std companion to `ewgeo-core`: density-matrix oracles, file formats,
//! parallel execution and the `ewgeo` command line.

pub mod cli;
pub mod exec;
pub mod io;
pub mod oracle;
pub mod ppt;
pub mod regions;
pub mod report;
pub mod sample;
