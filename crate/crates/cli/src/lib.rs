//! Front end for `structeig-core`: problem files, generators, the solve
//! runner with its error metrics, benchmark sweeps and the command line.

pub mod bench;
pub mod commands;
pub mod format;
pub mod generate;
pub mod run;
pub mod stats;
